#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "capa/simulate.hpp"

using namespace capa;
using namespace capa::sim;

TEST(Generate, PureNoiseWithoutAnomalies) {
    Scenario sc;
    sc.anomaly_rate = 0.0;
    sc.seed = 5;
    const auto [data, truth] = generate(sc);
    EXPECT_TRUE(truth.segments.empty());
    EXPECT_TRUE(truth.point_indices.empty());
    ASSERT_EQ(data.size(), 5000u);
    const double mean = std::accumulate(data.values.begin(), data.values.end(), 0.0) / 5000.0;
    double ss = 0.0;
    for (double v : data.values) {
        ss += (v - mean) * (v - mean);
    }
    EXPECT_LT(std::abs(mean), 0.06);
    EXPECT_NEAR(ss / 5000.0, 1.0, 0.06);
}

TEST(Generate, MeanSegmentCount) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Scenario sc;
        sc.a = 1.0;
        sc.seed = seed;
        total += static_cast<double>(generate(sc).second.segments.size());
    }
    const double mean = total / 1000.0;
    EXPECT_GE(mean, 2.2);
    EXPECT_LE(mean, 2.8);
}

TEST(Generate, Deterministic) {
    Scenario sc;
    sc.a = 2.0;
    sc.b = 1.0;
    sc.n_point_anomalies = 5;
    sc.seed = 123;
    const auto a = generate(sc), b = generate(sc);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    sc.seed = 124;
    EXPECT_NE(generate(sc).first, a.first);
}

TEST(Generate, StructureOfTruth) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Scenario sc;
        sc.n = 2000;
        sc.anomaly_rate = 0.005;
        sc.a = 1.0;
        sc.n_point_anomalies = 10;
        sc.seed = seed;
        const auto [data, truth] = generate(sc);
        std::size_t prev_end = 0;
        std::vector<bool> anomalous(sc.n + 1, false);
        for (const auto& s : truth.segments) {
            EXPECT_GE(s.end - s.start, 2u);
            EXPECT_GE(s.start, prev_end);
            EXPECT_LE(s.end, sc.n);
            prev_end = s.end;
            for (std::size_t t = s.start + 1; t <= s.end; ++t) {
                anomalous[t] = true;
            }
        }
        EXPECT_EQ(truth.point_indices.size(), 10u);
        EXPECT_TRUE(std::is_sorted(truth.point_indices.begin(), truth.point_indices.end()));
        for (std::size_t p : truth.point_indices) {
            EXPECT_FALSE(anomalous[p]) << seed;
        }
    }
}

TEST(Generate, SharedNoiseAcrossSignalSettings) {
    Scenario sc;
    sc.seed = 9;
    sc.a = 0.0;
    sc.b = 0.0;
    const auto base = generate(sc);
    sc.a = 3.0;
    const auto shifted = generate(sc);
    ASSERT_EQ(base.second.segments.size(), shifted.second.segments.size());
    for (std::size_t i = 0; i < base.second.segments.size(); ++i) {
        EXPECT_EQ(base.second.segments[i].start, shifted.second.segments[i].start);
    }
}

TEST(Generate, SegmentSdMean) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; count < 10000; ++seed) {
        Scenario sc;
        sc.n = 5000;
        sc.anomaly_rate = 0.01;
        sc.b = 1.0;
        sc.seed = seed;
        for (const auto& s : generate(sc).second.segments) {
            if (count < 10000) {
                sum += s.sd;
                ++count;
            }
        }
    }
    EXPECT_NEAR(sum / 10000.0, 1.0, 0.05);
}

TEST(Generate, InvalidScenario) {
    Scenario sc;
    sc.anomaly_rate = 1.5;
    EXPECT_THROW(generate(sc), InvalidInput);
    sc = {};
    sc.b = -1.0;
    EXPECT_THROW(generate(sc), InvalidInput);
}

TEST(Matching, TruthAgainstItself) {
    Scenario sc;
    sc.anomaly_rate = 0.002;
    sc.a = 2.0;
    sc.seed = 77;
    const auto truth = generate(sc).second;
    ASSERT_FALSE(truth.segments.empty());
    const auto r = match_events(truth_as_detection(truth), truth);
    EXPECT_EQ(r.true_positive_count, truth.segments.size());
    EXPECT_EQ(r.false_positive_count, 0u);
    ASSERT_TRUE(r.mean_abs_distance().has_value());
    EXPECT_EQ(*r.mean_abs_distance(), 0.0);
}

TEST(Matching, EmptyDetection) {
    GroundTruth truth;
    truth.n = 500;
    truth.segments.push_back({100, 130, 3.0, 1.0});
    const auto r = match_events(Detection{}, truth);
    EXPECT_EQ(r.true_positive_count, 0u);
    EXPECT_EQ(r.false_positive_count, 0u);
    EXPECT_EQ(r.true_count, 1u);
    EXPECT_FALSE(r.mean_abs_distance().has_value());
}

TEST(Matching, ChangepointsWithinTolerance) {
    GroundTruth truth;
    truth.n = 500;
    truth.segments.push_back({100, 130, 3.0, 1.0});
    classic::ChangepointResult cps;
    cps.n = 500;
    cps.changepoints = {97, 130};
    const auto r = match_events(cps, truth, 20);
    EXPECT_EQ(r.true_positive_count, 2u);
    EXPECT_EQ(r.false_positive_count, 0u);
    EXPECT_EQ(r.true_count, 2u);
    EXPECT_DOUBLE_EQ(*r.mean_abs_distance(), 1.5);
}

TEST(Matching, OneToOne) {
    GroundTruth truth;
    truth.n = 500;
    truth.segments.push_back({100, 130, 3.0, 1.0});
    Detection d;
    CollectiveAnomaly a;
    a.start = 99;
    a.end = 131;
    d.collective.push_back(a);
    a.start = 104;
    a.end = 128;
    d.collective.push_back(a);
    a.start = 300;
    a.end = 330;
    d.collective.push_back(a);
    const auto r = match_events(d, truth, 20);
    EXPECT_EQ(r.true_positive_count, 1u);
    EXPECT_EQ(r.false_positive_count, 2u);
}

TEST(Matching, BoundariesAtSeriesEdgesAreNotChanges) {
    GroundTruth truth;
    truth.n = 100;
    truth.segments.push_back({0, 30, 3.0, 1.0});
    truth.segments.push_back({80, 100, 3.0, 1.0});
    classic::ChangepointResult cps;
    cps.changepoints = {30, 80};
    const auto r = match_events(cps, truth, 5);
    EXPECT_EQ(r.true_count, 2u);
    EXPECT_EQ(r.true_positive_count, 2u);
}

TEST(Matching, ReportAddition) {
    EvalReport a, b;
    a.true_positive_count = 2;
    a.true_count = 3;
    a.distance_count = 2;
    a.distance_sum = 4.0;
    b.true_positive_count = 1;
    b.false_positive_count = 5;
    b.true_count = 1;
    a += b;
    EXPECT_EQ(a.true_positive_count, 3u);
    EXPECT_EQ(a.false_positive_count, 5u);
    EXPECT_EQ(a.true_count, 4u);
    EXPECT_DOUBLE_EQ(*a.mean_abs_distance(), 2.0);
}

TEST(Replicates, IndependentOfThreadCount) {
    Scenario sc;
    sc.n = 1000;
    sc.anomaly_rate = 0.002;
    sc.a = 3.0;
    sc.seed = 40;
    MethodConfig m;
    const auto serial = run_replicates(sc, m, 8, 20, 1);
    const auto threaded = run_replicates(sc, m, 8, 20, 4);
    EXPECT_EQ(serial, threaded);
}

TEST(Roc, HugePenaltyDetectsNothing) {
    Scenario sc;
    sc.n = 1000;
    sc.a = 2.0;
    sc.seed = 1;
    RocOptions opt;
    opt.replicates = 5;
    for (auto method : {Method::capa, Method::pelt}) {
        const auto roc = roc_sweep(sc, method, {1e6}, opt);
        ASSERT_EQ(roc.size(), 1u);
        EXPECT_EQ(roc[0].tp_rate, 0.0);
        EXPECT_EQ(roc[0].fp_count, 0.0);
    }
}

TEST(Roc, MatchesManualEvaluation) {
    Scenario sc;
    sc.n = 1000;
    sc.anomaly_rate = 0.002;
    sc.a = 2.0;
    sc.seed = 600;
    RocOptions opt;
    opt.replicates = 5;
    const double pen = 4.0 * std::log(1000.0);
    const auto roc = roc_sweep(sc, Method::capa, {pen}, opt);
    std::size_t tp = 0, fp = 0, truth_count = 0;
    for (std::size_t r = 0; r < 5; ++r) {
        Scenario s = sc;
        s.seed = sc.seed + r;
        const auto [data, truth] = generate(s);
        CapaConfig c;
        c.beta = pen;
        c.beta_prime = std::min(pen, 3.0 * std::log(1000.0));
        const auto rep = match_events(detect(data, c), truth, 20);
        tp += rep.true_positive_count;
        fp += rep.false_positive_count;
        truth_count += rep.true_count;
    }
    EXPECT_DOUBLE_EQ(roc[0].tp_rate, static_cast<double>(tp) / static_cast<double>(truth_count));
    EXPECT_DOUBLE_EQ(roc[0].fp_count, static_cast<double>(fp) / 5.0);
    EXPECT_THROW(roc_sweep(sc, Method::capa, {}, opt), InvalidInput);
}

TEST(Roc, StrongMeanChangesAreFound) {
    Scenario sc;
    sc.a = 10.0;
    sc.seed = 2000;
    RocOptions opt;
    opt.threads = default_thread_count();
    const auto roc = roc_sweep(sc, Method::capa, {4.0 * std::log(5000.0)}, opt);
    EXPECT_GE(roc[0].tp_rate, 0.9);
}

TEST(Runtime, ShapeAndValidation) {
    RuntimeOptions opt;
    opt.repeats = 1;
    const auto t = runtime_experiment({500, 1000}, false, opt);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0].n, 500u);
    EXPECT_GT(t[1].seconds, 0.0);
    EXPECT_THROW(runtime_experiment({1000, 500}, false, opt), InvalidInput);
    EXPECT_NEAR(loglog_slope({{10, 1.0}, {100, 10.0}, {1000, 100.0}}), 1.0, 1e-12);
    EXPECT_NEAR(loglog_slope({{10, 1.0}, {100, 100.0}}), 2.0, 1e-12);
}
