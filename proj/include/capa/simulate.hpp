#pragma once

// Synthetic epidemic-change data and the evaluation protocol used to compare
// CAPA with the classical baseline: event matching, precision and runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "capa/classic.hpp"
#include "capa/detect.hpp"
#include "capa/error.hpp"
#include "capa/parallel.hpp"
#include "capa/series.hpp"

namespace capa::sim {

struct Scenario {
    std::size_t n = 5000;
    double anomaly_rate = 0.0005;
    double mean_length = 30.0;
    double a = 0.0; ///< anomalous means ~ N(0, a^2); 0 disables mean changes
    double b = 0.0; ///< anomalous sds ~ Gamma(1/b, rate 1/b); 0 disables variance changes
    std::size_t n_point_anomalies = 0;
    double point_anomaly_sd = 10.0;
    std::uint64_t seed = 0;
};

struct TrueSegment {
    std::size_t start = 0; ///< exclusive
    std::size_t end = 0;   ///< inclusive
    double mean = 0.0;
    double sd = 1.0;

    friend bool operator==(const TrueSegment&, const TrueSegment&) = default;
};

struct GroundTruth {
    std::size_t n = 0;
    std::vector<TrueSegment> segments;
    std::vector<std::size_t> point_indices; ///< 1-based, ascending

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Typical noise, segment placement, segment parameters and point anomalies
/// each draw from their own stream of the seed, so scenarios differing only in
/// a, b or the point anomalies share the same noise and segment locations.
inline std::pair<Series, GroundTruth> generate(const Scenario& sc) {
    if (!(sc.anomaly_rate >= 0.0 && sc.anomaly_rate <= 1.0) || !(sc.mean_length >= 0.0) || !(sc.a >= 0.0) ||
        !(sc.b >= 0.0) || !(sc.point_anomaly_sd >= 0.0)) {
        throw InvalidInput("invalid scenario parameters");
    }
    const auto lo = static_cast<std::uint32_t>(sc.seed);
    const auto hi = static_cast<std::uint32_t>(sc.seed >> 32);
    std::seed_seq noise_seed{lo, hi, 0u}, seg_seed{lo, hi, 1u}, point_seed{lo, hi, 2u}, param_seed{lo, hi, 3u};
    std::mt19937_64 noise_rng(noise_seed), seg_rng(seg_seed), point_rng(point_seed), param_rng(param_seed);

    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::vector<double> x(sc.n);
    for (double& v : x) {
        v = stdnorm(noise_rng);
    }

    GroundTruth truth;
    truth.n = sc.n;
    std::vector<bool> anomalous(sc.n, false);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::poisson_distribution<long> length_dist(sc.mean_length > 0.0 ? sc.mean_length : 1.0);
    for (std::size_t i = 0; i < sc.n;) {
        if (!(unif(seg_rng) < sc.anomaly_rate)) {
            ++i;
            continue;
        }
        std::size_t len = std::max<long>(2, length_dist(seg_rng));
        const double mean = sc.a > 0.0 ? std::normal_distribution<double>(0.0, sc.a)(param_rng) : 0.0;
        const double sd = sc.b > 0.0 ? std::gamma_distribution<double>(1.0 / sc.b, sc.b)(param_rng) : 1.0;
        len = std::min(len, sc.n - i);
        if (len < 2) {
            break;
        }
        for (std::size_t t = i; t < i + len; ++t) {
            x[t] = mean + sd * x[t];
            anomalous[t] = true;
        }
        truth.segments.push_back({i, i + len, mean, sd});
        i += len;
    }

    std::vector<std::size_t> typical;
    for (std::size_t i = 0; i < sc.n; ++i) {
        if (!anomalous[i]) {
            typical.push_back(i);
        }
    }
    std::shuffle(typical.begin(), typical.end(), point_rng);
    typical.resize(std::min(typical.size(), sc.n_point_anomalies));
    std::sort(typical.begin(), typical.end());
    std::normal_distribution<double> outlier(0.0, sc.point_anomaly_sd);
    for (std::size_t i : typical) {
        x[i] = outlier(point_rng);
        truth.point_indices.push_back(i + 1);
    }
    return {Series(std::move(x)), std::move(truth)};
}

struct EvalReport {
    std::size_t true_positive_count = 0;
    std::size_t false_positive_count = 0;
    std::size_t true_count = 0;
    std::size_t tolerance = 20;
    /// Changes with a detection within tolerance, and the summed distance to
    /// the nearest such detection.
    std::size_t distance_count = 0;
    double distance_sum = 0.0;
    /// Point anomaly recovery; CAPA only.
    std::size_t true_points = 0;
    std::size_t points_found = 0;
    std::size_t points_spurious = 0;

    std::optional<double> mean_abs_distance() const {
        if (distance_count == 0) {
            return std::nullopt;
        }
        return distance_sum / static_cast<double>(distance_count);
    }

    EvalReport& operator+=(const EvalReport& o) {
        true_positive_count += o.true_positive_count;
        false_positive_count += o.false_positive_count;
        true_count += o.true_count;
        distance_count += o.distance_count;
        distance_sum += o.distance_sum;
        true_points += o.true_points;
        points_found += o.points_found;
        points_spurious += o.points_spurious;
        return *this;
    }

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

namespace detail {

inline std::size_t absdiff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

// Greedy one-to-one matching of (cost, detected, true) triples by ascending
// cost, then by index.
inline std::size_t greedy_match(std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> pairs,
                                std::size_t n_detected, std::size_t n_true) {
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> used_d(n_detected, false), used_t(n_true, false);
    std::size_t matched = 0;
    for (auto [c, d, t] : pairs) {
        if (!used_d[d] && !used_t[t]) {
            used_d[d] = used_t[t] = true;
            ++matched;
        }
    }
    return matched;
}

// Adds, for each true location with a detected location within tolerance,
// the distance to the nearest one.
inline void accumulate_distance(EvalReport& r, const std::vector<std::size_t>& truth,
                                const std::vector<std::size_t>& detected) {
    for (std::size_t t : truth) {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (std::size_t d : detected) {
            best = std::min(best, absdiff(t, d));
        }
        if (best <= r.tolerance) {
            ++r.distance_count;
            r.distance_sum += static_cast<double>(best);
        }
    }
}

} // namespace detail

/// A detected segment is a true positive when its start and end are both
/// within tolerance of the start and end of the same true segment. Precision
/// compares true starts with detected starts and true ends with detected ends.
inline EvalReport match_events(const Detection& detected, const GroundTruth& truth, std::size_t tolerance = 20) {
    EvalReport r;
    r.tolerance = tolerance;
    r.true_count = truth.segments.size();
    const auto& ds = detected.collective;
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < truth.segments.size(); ++j) {
            const std::size_t s = detail::absdiff(ds[i].start, truth.segments[j].start);
            const std::size_t e = detail::absdiff(ds[i].end, truth.segments[j].end);
            if (s <= tolerance && e <= tolerance) {
                pairs.emplace_back(s + e, i, j);
            }
        }
    }
    r.true_positive_count = detail::greedy_match(std::move(pairs), ds.size(), truth.segments.size());
    r.false_positive_count = ds.size() - r.true_positive_count;

    std::vector<std::size_t> ts, te, dst, den;
    for (const auto& s : truth.segments) {
        ts.push_back(s.start);
        te.push_back(s.end);
    }
    for (const auto& s : ds) {
        dst.push_back(s.start);
        den.push_back(s.end);
    }
    detail::accumulate_distance(r, ts, dst);
    detail::accumulate_distance(r, te, den);

    r.true_points = truth.point_indices.size();
    for (const auto& p : detected.points) {
        if (std::binary_search(truth.point_indices.begin(), truth.point_indices.end(), p.index)) {
            ++r.points_found;
        } else {
            ++r.points_spurious;
        }
    }
    return r;
}

/// True changes are the segment boundaries strictly inside (0, n). Each
/// detected changepoint is matched one-to-one to a boundary within tolerance.
inline EvalReport match_events(const classic::ChangepointResult& detected, const GroundTruth& truth,
                               std::size_t tolerance = 20) {
    EvalReport r;
    r.tolerance = tolerance;
    std::vector<std::size_t> boundaries;
    for (const auto& s : truth.segments) {
        if (s.start > 0) {
            boundaries.push_back(s.start);
        }
        if (s.end < truth.n) {
            boundaries.push_back(s.end);
        }
    }
    boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());
    r.true_count = boundaries.size();
    const auto& cps = detected.changepoints;
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        for (std::size_t j = 0; j < boundaries.size(); ++j) {
            const std::size_t d = detail::absdiff(cps[i], boundaries[j]);
            if (d <= tolerance) {
                pairs.emplace_back(d, i, j);
            }
        }
    }
    r.true_positive_count = detail::greedy_match(std::move(pairs), cps.size(), boundaries.size());
    r.false_positive_count = cps.size() - r.true_positive_count;
    detail::accumulate_distance(r, boundaries, cps);
    r.true_points = truth.point_indices.size();
    return r;
}

/// The truth expressed as a Detection, for sanity checks of the matcher.
inline Detection truth_as_detection(const GroundTruth& truth) {
    Detection d;
    d.n = truth.n;
    for (const auto& s : truth.segments) {
        CollectiveAnomaly a;
        a.start = s.start;
        a.end = s.end;
        a.mean = s.mean;
        a.variance = s.sd * s.sd;
        d.collective.push_back(a);
    }
    for (std::size_t p : truth.point_indices) {
        d.points.push_back({p, 0.0, 0.0});
    }
    return d;
}

enum class Method { capa, pelt };

struct MethodConfig {
    Method method = Method::capa;
    std::size_t min_seg_len = 10;
    std::optional<double> beta;       ///< CAPA collective penalty, or the PELT penalty
    std::optional<double> beta_prime; ///< CAPA only
};

inline EvalReport evaluate(const Series& data, const GroundTruth& truth, const MethodConfig& m, std::size_t tolerance) {
    if (m.method == Method::pelt) {
        const double pen = m.beta.value_or(classic::bic_penalty(data.size()));
        return match_events(classic::pelt_detect(data, pen, m.min_seg_len), truth, tolerance);
    }
    CapaConfig cfg;
    cfg.min_seg_len = m.min_seg_len;
    cfg.beta = m.beta;
    cfg.beta_prime = m.beta_prime;
    if (m.beta && !m.beta_prime) {
        // keep beta' <= beta when only beta is varied
        cfg.beta_prime = std::min(*m.beta, default_beta_prime(data.size()));
    }
    return match_events(detect(data, cfg), truth, tolerance);
}

/// Replicate r uses seed base.seed + r. Output order is the replicate order
/// regardless of the thread count.
inline std::vector<EvalReport> run_replicates(const Scenario& base, const MethodConfig& m, std::size_t replicates,
                                              std::size_t tolerance = 20, unsigned threads = 1) {
    std::vector<EvalReport> out(replicates);
    parallel_for(replicates, threads, [&](std::size_t r) {
        Scenario sc = base;
        sc.seed = base.seed + r;
        const auto [data, truth] = generate(sc);
        out[r] = evaluate(data, truth, m, tolerance);
    });
    return out;
}

inline EvalReport pooled(const std::vector<EvalReport>& reports) {
    EvalReport total;
    if (!reports.empty()) {
        total.tolerance = reports.front().tolerance;
    }
    for (const auto& r : reports) {
        total += r;
    }
    return total;
}

struct RocPoint {
    double penalty = 0.0;
    double tp_rate = 0.0;  ///< detected true changes / true changes, pooled over replicates
    double fp_count = 0.0; ///< mean false positives per replicate
};

struct RocOptions {
    std::size_t replicates = 100;
    std::size_t min_seg_len = 10;
    std::size_t tolerance = 20;
    unsigned threads = 1;
};

inline std::vector<RocPoint> roc_sweep(const Scenario& sc, Method method, const std::vector<double>& penalty_grid,
                                       const RocOptions& opt = {}) {
    if (penalty_grid.empty()) {
        throw InvalidInput("ROC sweep needs at least one penalty");
    }
    std::vector<RocPoint> out;
    for (double pen : penalty_grid) {
        MethodConfig m;
        m.method = method;
        m.min_seg_len = opt.min_seg_len;
        m.beta = pen;
        const auto total = pooled(run_replicates(sc, m, opt.replicates, opt.tolerance, opt.threads));
        RocPoint p;
        p.penalty = pen;
        p.tp_rate = total.true_count == 0
                        ? 0.0
                        : static_cast<double>(total.true_positive_count) / static_cast<double>(total.true_count);
        p.fp_count = static_cast<double>(total.false_positive_count) / static_cast<double>(opt.replicates);
        out.push_back(p);
    }
    return out;
}

struct Timing {
    std::size_t n = 0;
    double seconds = 0.0; ///< mean wall-clock seconds per detection
};

struct RuntimeOptions {
    std::size_t repeats = 3;
    std::uint64_t seed = 0;
    /// Non-stationary design; n is overridden per size.
    Scenario design{5000, 0.0005, 30.0, 10.0, 0.0, 0, 10.0, 0};
};

/// Times detect() at each size, serially. Stationary data are pure N(0, 1).
inline std::vector<Timing> runtime_experiment(const std::vector<std::size_t>& sizes, bool stationary,
                                              const RuntimeOptions& opt = {}) {
    if (!std::is_sorted(sizes.begin(), sizes.end())) {
        throw InvalidInput("runtime sizes must be ascending");
    }
    std::vector<Timing> out;
    for (std::size_t n : sizes) {
        double total = 0.0;
        for (std::size_t rep = 0; rep < std::max<std::size_t>(opt.repeats, 1); ++rep) {
            Scenario sc = opt.design;
            sc.n = n;
            sc.seed = opt.seed + rep;
            if (stationary) {
                sc.anomaly_rate = 0.0;
                sc.n_point_anomalies = 0;
            }
            const auto data = generate(sc).first;
            const auto t0 = std::chrono::steady_clock::now();
            const auto det = detect(data);
            const auto t1 = std::chrono::steady_clock::now();
            total += std::chrono::duration<double>(t1 - t0).count();
            static_cast<void>(det);
        }
        out.push_back({n, total / static_cast<double>(std::max<std::size_t>(opt.repeats, 1))});
    }
    return out;
}

/// Slope of log(seconds) against log(n) between the first and last timing.
inline double loglog_slope(const std::vector<Timing>& t) {
    if (t.size() < 2 || t.front().n == t.back().n) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return (std::log(t.back().seconds) - std::log(t.front().seconds)) /
           (std::log(static_cast<double>(t.back().n)) - std::log(static_cast<double>(t.front().n)));
}

} // namespace capa::sim
