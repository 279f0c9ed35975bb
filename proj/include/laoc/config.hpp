#pragma once

#include "laoc/learning.hpp"
#include "laoc/model.hpp"
#include "laoc/priors.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace laoc {

/// Everything a JSON config file can set. Sections and keys mirror the
/// struct field names:
///
///   {"system":   {"tank_capacity": 80, ..., "distance": "asymmetric",
///                 "pump_knots": [[0, 0], [6, 7], [12, 11]]},
///    "safe_set": {"lambda": 0.4, "c1": 1.6, "c2": 1.1},
///    "train":    {"learning_rate": 5e-4, "epochs": 400, "batch_size": 20,
///                 "seed": 7, "mode": "pure", "lambda": 0.4},
///    "prior":    {"kind": "ogd", "ogd_step": 0, ...}}
///
/// Absent keys keep their defaults.
struct RunConfig {
    SystemParams system;
    double lambda = 0.4;
    std::optional<double> c1;
    std::optional<double> c2;
    TrainConfig train;
    PriorConfig prior;
};

/// Throws InvalidInput on unknown keys, wrong types or an unreadable file.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

/// Single-line JSON of the effective configuration, for output headers.
std::string echo_config(const RunConfig& config);

} // namespace laoc
