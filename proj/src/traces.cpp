#include "laoc/traces.hpp"

#include "laoc/errors.hpp"
#include "laoc/log.hpp"
#include "laoc/util.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace laoc {

ProfileParams ProfileParams::noiseless() const {
    ProfileParams p = *this;
    p.demand_noise_sigma = 0.0;
    p.carbon_noise_sigma = 0.0;
    p.price_noise_sigma = 0.0;
    return p;
}

ProfileParams ProfileParams::flat() const {
    ProfileParams p = noiseless();
    p.demand_amplitude = 0.0;
    p.weekend_drop = 0.0;
    p.carbon_dip = 0.0;
    p.price_dip = 0.0;
    p.price_peak = 0.0;
    return p;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Non-negative half-cosine bump centred on `center`, zero more than 6 h away.
double solar_bump(double hour, double center) {
    return std::max(0.0, std::cos(kTwoPi * (hour - center) / 24.0));
}

// Signed distance between two clock hours, in [-12, 12).
double clock_distance(double hour, double center) {
    double d = std::fmod(hour - center + 12.0, 24.0);
    if (d < 0.0) d += 24.0;
    return d - 12.0;
}

bool is_weekend(std::int64_t hour) {
    const std::int64_t day = hour >= 0 ? hour / 24 : (hour - 23) / 24;
    const std::int64_t weekday = ((day % 7) + 7 + 3) % 7; // 0 = Monday; 1970-01-01 was a Thursday
    return weekday >= 5;
}

} // namespace

std::vector<Episode> gen_synthetic(std::uint64_t seed, int n_episodes, int horizon,
                                   const ProfileParams& p) {
    if (horizon < 1) throw InvalidInput("horizon must be at least 1");
    if (n_episodes < 0) throw InvalidInput("episode count must be non-negative");

    std::vector<Episode> out;
    out.reserve(static_cast<std::size_t>(n_episodes));
    for (int i = 0; i < n_episodes; ++i) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        std::normal_distribution<double> normal(0.0, 1.0);

        Episode ep;
        ep.start_hour = kSyntheticEpochHour + static_cast<std::int64_t>(i) * 24;
        ep.id = format_hour(ep.start_hour);
        const double weekday_factor = is_weekend(ep.start_hour) ? 1.0 - p.weekend_drop : 1.0;
        ep.steps.resize(static_cast<std::size_t>(horizon));
        for (int h = 0; h < horizon; ++h) {
            const double hour = static_cast<double>(h % 24);
            // Draw all three so every stream advances identically.
            const double zd = normal(rng);
            const double ze = normal(rng);
            const double zp = normal(rng);

            const double shape = p.demand_base +
                                 p.demand_amplitude * std::cos(kTwoPi * (hour - p.demand_peak_hour) / 24.0);
            const double sd = p.demand_noise_sigma;
            const double noise = std::exp(sd * zd - 0.5 * sd * sd);
            auto& s = ep.steps[static_cast<std::size_t>(h)];
            s.demand = std::max(0.0, weekday_factor * shape * noise);

            s.carbon_intensity =
                std::max(0.0, p.carbon_base - p.carbon_dip * solar_bump(hour, p.carbon_dip_hour) +
                                  p.carbon_noise_sigma * ze);

            const double peak_d = clock_distance(hour, p.price_peak_hour) / p.price_peak_width;
            s.price = std::max(0.0, p.price_base - p.price_dip * solar_bump(hour, p.carbon_dip_hour) +
                                        p.price_peak * std::exp(-0.5 * peak_d * peak_d) +
                                        p.price_noise_sigma * zp);
        }
        out.push_back(std::move(ep));
    }
    return out;
}

double ood_sigma(const std::vector<Episode>& episodes, double fraction) {
    double wmax = 0.0;
    for (const auto& e : episodes)
        for (const auto& s : e.steps) wmax = std::max(wmax, s.demand);
    return fraction * wmax;
}

std::vector<std::vector<double>> ood_noise(const std::vector<Episode>& episodes,
                                           std::uint64_t seed, double fraction) {
    if (episodes.empty()) throw InvalidInput("OOD perturbation needs episodes");
    const double sigma = ood_sigma(episodes, fraction);
    std::vector<std::vector<double>> noise(episodes.size());
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        std::mt19937_64 rng(mix_seed(seed, mix_seed(fnv1a(episodes[i].id), i)));
        std::normal_distribution<double> normal(0.0, 1.0);
        noise[i].resize(episodes[i].size());
        for (auto& v : noise[i]) v = sigma * normal(rng);
    }
    return noise;
}

std::vector<Episode> perturb_ood(const std::vector<Episode>& episodes, std::uint64_t seed,
                                 double fraction) {
    const auto noise = ood_noise(episodes, seed, fraction);
    auto out = episodes;
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t h = 0; h < out[i].size(); ++h)
            out[i].steps[h].demand = std::max(0.0, out[i].steps[h].demand + noise[i][h]);
    return out;
}

std::string format_hour(std::int64_t hour) {
    using namespace std::chrono;
    const std::int64_t day = hour >= 0 ? hour / 24 : (hour - 23) / 24;
    const int hh = static_cast<int>(hour - day * 24);
    const year_month_day ymd{sys_days{days{day}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hh);
    return buf;
}

namespace {

int parse_digits(const std::string& s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) throw InvalidInput("truncated timestamp '" + s + "'");
    int v = 0;
    const auto* first = s.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + n, v);
    if (ec != std::errc{} || ptr != first + n)
        throw InvalidInput("malformed timestamp '" + s + "'");
    return v;
}

void expect_char(const std::string& s, std::size_t pos, const char* allowed) {
    if (pos >= s.size() || std::string(allowed).find(s[pos]) == std::string::npos)
        throw InvalidInput("malformed timestamp '" + s + "'");
}

} // namespace

std::int64_t parse_hour(const std::string& s) {
    using namespace std::chrono;
    // YYYY-MM-DDTHH:MM
    const int y = parse_digits(s, 0, 4);
    expect_char(s, 4, "-");
    const int mo = parse_digits(s, 5, 2);
    expect_char(s, 7, "-");
    const int d = parse_digits(s, 8, 2);
    expect_char(s, 10, "T ");
    const int hh = parse_digits(s, 11, 2);
    expect_char(s, 13, ":");
    const int mi = parse_digits(s, 14, 2);
    std::size_t pos = 16;
    int sec = 0;
    if (pos < s.size() && s[pos] == ':') {
        sec = parse_digits(s, pos + 1, 2);
        pos += 3;
    }
    int offset_min = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            pos += 1;
        } else if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size()) {
            const int oh = parse_digits(s, pos + 1, 2);
            expect_char(s, pos + 3, ":");
            const int om = parse_digits(s, pos + 4, 2);
            offset_min = (s[pos] == '-' ? -1 : 1) * (oh * 60 + om);
            pos += 6;
        } else {
            throw InvalidInput("malformed timestamp '" + s + "'");
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mi > 59 || sec > 59)
        throw InvalidInput("timestamp out of range '" + s + "'");
    const std::int64_t minutes = static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * 1440 +
                                 hh * 60 + mi - offset_min;
    if (sec != 0 || minutes % 60 != 0)
        throw InvalidInput("timestamp '" + s + "' is not on the hour");
    return minutes / 60;
}

namespace {

// RFC 4180 field splitting for one physical line (fields never span lines
// in this schema).
std::vector<std::string> split_csv(const std::string& line, int line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!cur.empty() || was_quoted) throw ParseError("stray quote in field", line_no);
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            if (was_quoted) throw ParseError("text after closing quote", line_no);
            cur += c;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no);
    fields.push_back(std::move(cur));
    return fields;
}

double parse_value(const std::string& field, const char* name, int line_no) {
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = first + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc{} || ptr != last)
        throw ParseError(std::string("invalid ") + name + " value '" + field + "'", line_no);
    if (!std::isfinite(v) || v < 0.0)
        throw ParseError(std::string(name) + " must be finite and non-negative, got '" + field + "'",
                         line_no);
    return v;
}

struct Row {
    std::int64_t hour;
    TraceStep step;
};

void flush_segment(std::vector<Row>& segment, int horizon, CsvLoad& out) {
    const auto h = static_cast<std::size_t>(horizon);
    std::size_t start = 0;
    for (; start + h <= segment.size(); start += h) {
        Episode ep;
        ep.start_hour = segment[start].hour;
        ep.id = format_hour(ep.start_hour);
        for (std::size_t k = 0; k < h; ++k) ep.steps.push_back(segment[start + k].step);
        out.episodes.push_back(std::move(ep));
    }
    const auto tail = segment.size() - start;
    if (tail > 0) {
        out.dropped_rows += static_cast<int>(tail);
        log_warning("dropping " + std::to_string(tail) + " row(s) starting at " +
                    format_hour(segment[start].hour) + ": shorter than the horizon of " +
                    std::to_string(horizon));
    }
    segment.clear();
}

} // namespace

CsvLoad load_csv(std::istream& in, int horizon) {
    if (horizon < 1) throw InvalidInput("horizon must be at least 1");
    CsvLoad out;
    std::vector<Row> segment;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != kTraceCsvHeader)
                throw ParseError("expected header '" + std::string(kTraceCsvHeader) + "'", line_no);
            header_seen = true;
            continue;
        }
        const auto fields = split_csv(line, line_no);
        if (fields.size() != 4)
            throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
        Row row{};
        try {
            row.hour = parse_hour(fields[0]);
        } catch (const InvalidInput& e) {
            throw ParseError(e.what(), line_no);
        }
        row.step.demand = parse_value(fields[1], "demand_m3", line_no);
        row.step.carbon_intensity = parse_value(fields[2], "carbon_g_per_kwh", line_no);
        row.step.price = parse_value(fields[3], "price_usd_per_kwh", line_no);

        if (!segment.empty()) {
            const auto prev = segment.back().hour;
            if (row.hour <= prev)
                throw ParseError("timestamp " + fields[0] + " is not after the previous row",
                                 line_no);
            if (row.hour != prev + 1) flush_segment(segment, horizon, out);
        }
        segment.push_back(row);
    }
    if (!header_seen) throw ParseError("missing header", line_no == 0 ? 1 : line_no);
    flush_segment(segment, horizon, out);
    return out;
}

CsvLoad load_csv(const std::filesystem::path& path, int horizon) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file '" + path.string() + "'");
    return load_csv(in, horizon);
}

void write_csv(std::ostream& out, const std::vector<Episode>& episodes,
               const std::string& comment) {
    out << kTraceCsvHeader << '\n';
    if (!comment.empty()) out << "# " << comment << '\n';
    char buf[128];
    for (const auto& ep : episodes) {
        for (std::size_t h = 0; h < ep.size(); ++h) {
            const auto& s = ep.steps[h];
            std::snprintf(buf, sizeof buf, ",%.9g,%.9g,%.9g\n", s.demand, s.carbon_intensity,
                          s.price);
            out << format_hour(ep.start_hour + static_cast<std::int64_t>(h)) << buf;
        }
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<Episode>& episodes,
               const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write trace file '" + path.string() + "'");
    write_csv(out, episodes, comment);
    if (!out) throw Error("failed writing trace file '" + path.string() + "'");
}

} // namespace laoc
