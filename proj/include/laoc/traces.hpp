#pragma once

#include "laoc/model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace laoc {

/// Diurnal shapes of the synthetic generator. Hours are local clock hours.
struct ProfileParams {
    double demand_base = 3.0;       ///< m^3/h
    double demand_amplitude = 2.0;  ///< daily sinusoid amplitude
    double demand_peak_hour = 14.0;
    double weekend_drop = 0.15;     ///< relative demand reduction on Sat/Sun
    double demand_noise_sigma = 0.25; ///< lognormal sigma, mean-one factor

    double carbon_base = 450.0;     ///< g/kWh at night
    double carbon_dip = 300.0;      ///< solar dip depth at carbon_dip_hour
    double carbon_dip_hour = 13.0;
    double carbon_noise_sigma = 10.0;

    double price_base = 0.08;       ///< $/kWh
    double price_dip = 0.05;        ///< midday dip depth
    double price_peak = 0.07;       ///< evening peak height
    double price_peak_hour = 19.0;
    double price_peak_width = 1.5;  ///< hours (Gaussian bump)
    double price_noise_sigma = 0.003;

    /// Same shapes with every noise term switched off.
    ProfileParams noiseless() const;
    /// Base levels only: all amplitudes and noise are zero.
    ProfileParams flat() const;
};

/// First episode starts at 2024-01-01T00:00Z (a Monday).
inline constexpr std::int64_t kSyntheticEpochHour = 473'352;

/// n_episodes consecutive days of horizon hours each. Episode i is generated
/// from its own stream seeded by (seed, i), so the set is a pure function of
/// the arguments.
std::vector<Episode> gen_synthetic(std::uint64_t seed, int n_episodes, int horizon,
                                   const ProfileParams& profile = {});

/// sigma used by perturb_ood: fraction * max demand over the dataset.
double ood_sigma(const std::vector<Episode>& episodes, double fraction = 0.3);

/// The Gaussian noise perturb_ood adds to every demand sample, before clamping.
std::vector<std::vector<double>> ood_noise(const std::vector<Episode>& episodes,
                                           std::uint64_t seed, double fraction = 0.3);

/// Adds ood_noise to demand and clamps at zero. Carbon and price are unchanged.
std::vector<Episode> perturb_ood(const std::vector<Episode>& episodes, std::uint64_t seed,
                                 double fraction = 0.3);

inline constexpr const char* kTraceCsvHeader =
    "timestamp,demand_m3,carbon_g_per_kwh,price_usd_per_kwh";

struct CsvLoad {
    std::vector<Episode> episodes;
    int dropped_rows = 0; ///< rows in segments shorter than the horizon
};

/// Parses the trace schema. Rows must be hourly and strictly increasing; a
/// gap starts a new segment. Each segment is cut into horizon-length
/// episodes and a short tail is dropped with a warning. Lines starting with
/// '#' are comments. Throws ParseError with the 1-based line number.
CsvLoad load_csv(std::istream& in, int horizon);
CsvLoad load_csv(const std::filesystem::path& path, int horizon);

/// Writes header, optional '#' comment line, and one row per step with
/// values at 9 significant digits.
void write_csv(std::ostream& out, const std::vector<Episode>& episodes,
               const std::string& comment = {});
void write_csv(const std::filesystem::path& path, const std::vector<Episode>& episodes,
               const std::string& comment = {});

/// "YYYY-MM-DDTHH:MM:SSZ" for an hour index since the Unix epoch.
std::string format_hour(std::int64_t hour);
/// Accepts YYYY-MM-DDTHH:MM[:SS][Z|+00:00], also with a space separator.
/// Minutes and seconds must be zero. Throws InvalidInput.
std::int64_t parse_hour(const std::string& timestamp);

} // namespace laoc
