#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "capa/io.hpp"
#include "test_support.hpp"

using namespace capa;

TEST(ReadSeries, OptionalHeaderAndColumns) {
    std::istringstream plain("1.5\n2\n\n-3e2\n");
    const auto a = io::read_series_csv(plain);
    EXPECT_EQ(a.values, (std::vector<double>{1.5, 2.0, -300.0}));
    EXPECT_TRUE(a.times.empty());

    std::istringstream timed("time,value\n0,1\n1,\n2,3\n");
    const auto b = io::read_series_csv(timed);
    EXPECT_EQ(b.times, (std::vector<double>{0.0, 1.0, 2.0}));
    EXPECT_EQ(b.values[0], 1.0);
    EXPECT_TRUE(is_missing(b.values[1]));
    EXPECT_EQ(b.values[2], 3.0);
}

TEST(ReadSeries, ReportsBadLines) {
    std::istringstream bad("value\n1\nabc\n3\n4,5,6\n");
    try {
        io::read_series_csv(bad);
        FAIL() << "expected InvalidInput";
    } catch (const InvalidInput& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("3"), std::string::npos);
        EXPECT_NE(msg.find("5"), std::string::npos);
    }
}

TEST(ReadLightCurve, DropsBlankFluxAndChecksOrder) {
    std::istringstream ok("time_days,flux\n0.0,1\n0.5,\n1.0,2\n");
    const auto c = io::read_light_curve_csv(ok);
    EXPECT_EQ(c.times, (std::vector<double>{0.0, 1.0}));
    EXPECT_EQ(c.values, (std::vector<double>{1.0, 2.0}));

    std::istringstream unordered("1.0,2\n0.5,1\n");
    EXPECT_THROW(io::read_light_curve_csv(unordered), InvalidInput);
    std::istringstream single("1.0\n2.0\n");
    EXPECT_THROW(io::read_light_curve_csv(single), InvalidInput);
}

TEST(ParsePenalty, Forms) {
    const double l = std::log(1000.0);
    EXPECT_DOUBLE_EQ(io::parse_penalty("4logn", 1000), 4.0 * l);
    EXPECT_DOUBLE_EQ(io::parse_penalty("4*logn", 1000), 4.0 * l);
    EXPECT_DOUBLE_EQ(io::parse_penalty(" 2.5 log(n) ", 1000), 2.5 * l);
    EXPECT_DOUBLE_EQ(io::parse_penalty("logn", 1000), l);
    EXPECT_DOUBLE_EQ(io::parse_penalty("17.5", 1000), 17.5);
    EXPECT_THROW(io::parse_penalty("fourlogn", 1000), InvalidInput);
    EXPECT_THROW(io::parse_penalty("", 1000), InvalidInput);
}

TEST(Json, DetectionRoundTrip) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto x = capa::testing::normal_draws(300, seed);
        for (std::size_t t = 100; t < 140; ++t) {
            x[t] += 4.0 + static_cast<double>(seed % 3);
        }
        x[200] = 20.0;
        CapaConfig c;
        if (seed % 2) {
            c.max_seg_len = 80;
        }
        const auto d = detect(Series(x), c);
        const nlohmann::json j = d;
        const auto back = nlohmann::json::parse(j.dump()).get<Detection>();
        EXPECT_EQ(back, d) << seed;
    }
}

TEST(Json, ChangepointFields) {
    classic::ChangepointResult r;
    r.changepoints = {10, 20};
    r.total_cost = 1.5;
    r.penalty = 3.0;
    r.n = 30;
    const nlohmann::json j = r;
    EXPECT_EQ(j.at("changepoints"), nlohmann::json::array({10, 20}));
    EXPECT_EQ(j.at("n"), 30);
}

TEST(Csv, Writers) {
    auto x = capa::testing::normal_draws(200, 4);
    for (std::size_t t = 50; t < 90; ++t) {
        x[t] += 6.0;
    }
    const auto d = detect(Series(x));
    std::ostringstream c, p;
    io::write_collective_csv(c, d);
    io::write_points_csv(p, d);
    const std::string cs = c.str();
    EXPECT_EQ(cs.substr(0, cs.find('\n')), "start,end,mean,variance,delta_mu,delta_sigma_sq,delta,saving");
    EXPECT_EQ(std::count(cs.begin(), cs.end(), '\n'), 1 + static_cast<long>(d.collective.size()));
    EXPECT_EQ(p.str(), "index,value,standardized_sq_residual\n");

    transit::PeriodScan scan;
    scan.records.push_back({1.0, 0.5, std::nullopt, ""});
    scan.records.push_back({1.5, std::nullopt, std::nullopt, "failed"});
    std::ostringstream s;
    io::write_period_scan_csv(s, scan);
    EXPECT_EQ(s.str(), "period,max_delta_mu\n1,0.5\n1.5,\n");
}
