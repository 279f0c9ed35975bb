#include "laoc/errors.hpp"
#include "laoc/traces.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace laoc;

namespace {

std::string rows(int n, std::int64_t start = kSyntheticEpochHour) {
    std::ostringstream out;
    out << kTraceCsvHeader << "\n";
    for (int i = 0; i < n; ++i) out << format_hour(start + i) << ",3.5,400,0.09\n";
    return out.str();
}

} // namespace

TEST(Synthetic, NoiselessIsDeterministicAndPeriodic) {
    const auto profile = ProfileParams{}.noiseless();
    const auto a = gen_synthetic(1, 3, 48, profile);
    const auto b = gen_synthetic(1, 3, 48, profile);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].size(), 48u);
        for (std::size_t h = 0; h < 24; ++h) {
            EXPECT_EQ(a[i].steps[h].demand, b[i].steps[h].demand);
            EXPECT_EQ(a[i].steps[h].demand, a[i].steps[h + 24].demand);
        }
    }
}

TEST(Synthetic, SameSeedSameEpisodes) {
    const auto a = gen_synthetic(9, 5, 24);
    const auto b = gen_synthetic(9, 5, 24);
    const auto c = gen_synthetic(10, 5, 24);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].id, b[i].id);
        for (std::size_t h = 0; h < 24; ++h) {
            EXPECT_EQ(a[i].steps[h].demand, b[i].steps[h].demand);
            differs = differs || a[i].steps[h].demand != c[i].steps[h].demand;
        }
    }
    EXPECT_TRUE(differs);
}

TEST(Synthetic, FlatProfileIsConstant) {
    const ProfileParams base;
    const auto e = gen_synthetic(4, 8, 24, base.flat());
    for (const auto& ep : e)
        for (const auto& s : ep.steps) {
            EXPECT_DOUBLE_EQ(s.demand, base.demand_base);
            EXPECT_DOUBLE_EQ(s.carbon_intensity, base.carbon_base);
            EXPECT_DOUBLE_EQ(s.price, base.price_base);
        }
}

TEST(Synthetic, AllFieldsNonNegative) {
    const auto e = gen_synthetic(5, 420, 24); // 10080 steps
    for (const auto& ep : e)
        for (const auto& s : ep.steps) {
            EXPECT_GE(s.demand, 0.0);
            EXPECT_GE(s.carbon_intensity, 0.0);
            EXPECT_GE(s.price, 0.0);
        }
}

TEST(Synthetic, ConsecutiveDaysWithTimestamps) {
    const auto e = gen_synthetic(5, 3, 24);
    EXPECT_EQ(e[0].id, "2024-01-01T00:00:00Z");
    EXPECT_EQ(e[1].start_hour, e[0].start_hour + 24);
}

TEST(Ood, NoiseScaleMatches) {
    const auto e = gen_synthetic(6, 4200, 24); // 100800 samples
    const double sigma = ood_sigma(e);
    double wmax = 0;
    for (const auto& ep : e)
        for (const auto& s : ep.steps) wmax = std::max(wmax, s.demand);
    EXPECT_DOUBLE_EQ(sigma, 0.3 * wmax);
    const auto noise = ood_noise(e, 3);
    double sum = 0, sq = 0, n = 0;
    for (const auto& row : noise)
        for (double v : row) sum += v, sq += v * v, n += 1;
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    EXPECT_NEAR(sd, sigma, 0.02 * sigma);
}

TEST(Ood, DeterministicClampedAndDemandOnly) {
    const auto e = gen_synthetic(6, 20, 24);
    const auto a = perturb_ood(e, 3);
    const auto b = perturb_ood(e, 3);
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t h = 0; h < 24; ++h) {
            EXPECT_EQ(a[i].steps[h].demand, b[i].steps[h].demand);
            EXPECT_GE(a[i].steps[h].demand, 0.0);
            EXPECT_EQ(a[i].steps[h].price, e[i].steps[h].price);
            EXPECT_EQ(a[i].steps[h].carbon_intensity, e[i].steps[h].carbon_intensity);
        }

    auto zero = e;
    for (auto& ep : zero)
        for (auto& s : ep.steps) s.demand = 0.0;
    for (const auto& ep : perturb_ood(zero, 3))
        for (const auto& s : ep.steps) EXPECT_EQ(s.demand, 0.0);
}

TEST(Csv, ExactPartition) {
    std::istringstream in(rows(48));
    const auto r = load_csv(in, 24);
    ASSERT_EQ(r.episodes.size(), 2u);
    EXPECT_EQ(r.dropped_rows, 0);
    EXPECT_EQ(r.episodes[1].start_hour, kSyntheticEpochHour + 24);
}

TEST(Csv, ShortTailDropped) {
    std::istringstream in(rows(50));
    const auto r = load_csv(in, 24);
    EXPECT_EQ(r.episodes.size(), 2u);
    EXPECT_EQ(r.dropped_rows, 2);
}

TEST(Csv, GapStartsNewSegment) {
    std::string text = rows(30);
    std::istringstream tail(rows(24, kSyntheticEpochHour + 100));
    std::string line;
    std::getline(tail, line); // header
    while (std::getline(tail, line)) text += line + "\n";
    std::istringstream in(text);
    const auto r = load_csv(in, 24);
    ASSERT_EQ(r.episodes.size(), 2u);
    EXPECT_EQ(r.dropped_rows, 6);
    EXPECT_EQ(r.episodes[1].start_hour, kSyntheticEpochHour + 100);
}

TEST(Csv, NegativeDemandIsParseError) {
    std::string text = rows(24);
    text += format_hour(kSyntheticEpochHour + 24) + ",-1,400,0.09\n";
    std::istringstream in(text);
    try {
        load_csv(in, 24);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 26u);
    }
}

TEST(Csv, MalformedInputs) {
    std::istringstream bad_header("time,demand\n");
    EXPECT_THROW(load_csv(bad_header, 24), ParseError);
    std::istringstream short_row(std::string(kTraceCsvHeader) + "\n2024-01-01T00:00:00Z,1,2\n");
    EXPECT_THROW(load_csv(short_row, 24), ParseError);
    std::istringstream backwards(std::string(kTraceCsvHeader) +
                                 "\n2024-01-01T01:00:00Z,1,2,3\n2024-01-01T00:00:00Z,1,2,3\n");
    EXPECT_THROW(load_csv(backwards, 24), ParseError);
    std::istringstream nan(std::string(kTraceCsvHeader) + "\n2024-01-01T00:00:00Z,nan,2,3\n");
    EXPECT_THROW(load_csv(nan, 24), ParseError);
    EXPECT_THROW(load_csv(std::filesystem::path("/nonexistent/t.csv"), 24), Error);
}

TEST(Csv, AcceptsQuotesCommentsAndCrlf) {
    std::string text = "\xEF\xBB\xBF" + std::string(kTraceCsvHeader) + "\r\n# note\r\n";
    for (int i = 0; i < 24; ++i)
        text += "\"" + format_hour(kSyntheticEpochHour + i) + "\",1.5,\"300\",0.1\r\n";
    std::istringstream in(text);
    const auto r = load_csv(in, 24);
    ASSERT_EQ(r.episodes.size(), 1u);
    EXPECT_EQ(r.episodes[0].steps[5].carbon_intensity, 300.0);
}

TEST(Csv, RoundTripIsByteIdentical) {
    const auto e = gen_synthetic(12, 6, 24);
    std::ostringstream first;
    write_csv(first, e, "seed 12");
    std::istringstream in(first.str());
    const auto back = load_csv(in, 24);
    std::ostringstream second;
    write_csv(second, back.episodes, "seed 12");
    EXPECT_EQ(first.str(), second.str());
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t h = 0; h < 24; ++h)
            EXPECT_NEAR(back.episodes[i].steps[h].demand, e[i].steps[h].demand,
                        1e-8 * (1 + e[i].steps[h].demand));
}

TEST(Time, FormatAndParse) {
    EXPECT_EQ(format_hour(0), "1970-01-01T00:00:00Z");
    EXPECT_EQ(format_hour(kSyntheticEpochHour), "2024-01-01T00:00:00Z");
    EXPECT_EQ(parse_hour("2024-01-01T00:00:00Z"), kSyntheticEpochHour);
    EXPECT_EQ(parse_hour("2024-01-01 05:00"), kSyntheticEpochHour + 5);
    EXPECT_EQ(parse_hour("2024-01-01T05:00:00+02:00"), kSyntheticEpochHour + 3);
    EXPECT_THROW(parse_hour("2024-01-01T05:30:00Z"), InvalidInput);
    EXPECT_THROW(parse_hour("yesterday"), InvalidInput);
}
