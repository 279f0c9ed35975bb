#pragma once

#include <stdexcept>
#include <string>

namespace laoc {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite numbers, out-of-range arguments, inconsistent configuration.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Safety slack or reservation constants outside their admissible range.
class InvalidSafety : public Error {
public:
    using Error::Error;
};

/// The safe action set turned out empty. Only reachable when the caller broke
/// the induction hypothesis (an earlier action was taken outside its safe set).
class EmptySet : public Error {
public:
    using Error::Error;
};

/// An internal guarantee did not hold. Always a bug or a corrupted input.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Training diverged (non-finite loss or gradient).
class TrainingDiverged : public Error {
public:
    using Error::Error;
};

} // namespace laoc
