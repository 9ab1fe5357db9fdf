#pragma once

// Penalized-cost detection of collective and point anomalies.
//
// The data are standardized with robust (or caller-supplied) typical
// parameters and the cost
//
//   sum_{typical t} x_t^2
//   + sum_{point t} [1 + log(gamma + x_t^2) + beta']
//   + sum_{segments (s,e]} [(e - s)(log(var_{s+1:e}) + 1) + beta]
//
// is minimized exactly by dynamic programming over prefixes. Candidate
// segment starts are pruned once they can never again be optimal.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capa/cost.hpp"
#include "capa/error.hpp"
#include "capa/robust.hpp"
#include "capa/series.hpp"

namespace capa {

inline double default_beta(std::size_t n) { return 4.0 * std::log(static_cast<double>(n)); }
inline double default_beta_prime(std::size_t n) { return 3.0 * std::log(static_cast<double>(n)); }
inline double default_gamma(double beta_prime) { return std::max(std::exp(-beta_prime), 1e-12); }

struct CapaConfig {
    std::optional<double> beta;       ///< collective penalty; 4 log n when unset
    std::optional<double> beta_prime; ///< point penalty; 3 log n when unset
    std::optional<double> gamma;      ///< point-cost guard; max(exp(-beta'), 1e-12) when unset
    double collective_guard = 0.0;    ///< added to segment variances inside the log
    std::size_t min_seg_len = 10;
    std::optional<std::size_t> max_seg_len;
    bool pruning = true;
    std::optional<TypicalParams> known_params;
    robust::ScaleConvention scale = robust::ScaleConvention::normal_consistent;
};

/// A CapaConfig with every default filled in for a series of length n.
struct ResolvedConfig {
    double beta = 0.0;
    double beta_prime = 0.0;
    double gamma = 0.0;
    double collective_guard = 0.0;
    std::size_t min_seg_len = 2;
    std::size_t max_seg_len = 0; ///< 0 means unbounded
    bool pruning = true;

    friend bool operator==(const ResolvedConfig&, const ResolvedConfig&) = default;
};

inline ResolvedConfig resolve(const CapaConfig& c, std::size_t n) {
    ResolvedConfig r;
    r.beta = c.beta.value_or(default_beta(n));
    r.beta_prime = c.beta_prime.value_or(default_beta_prime(n));
    r.gamma = c.gamma.value_or(default_gamma(r.beta_prime));
    r.collective_guard = c.collective_guard;
    r.min_seg_len = c.min_seg_len;
    r.max_seg_len = c.max_seg_len.value_or(0);
    r.pruning = c.pruning;
    if (!(r.beta > 0.0) || !(r.beta_prime > 0.0)) {
        throw InvalidInput("penalties must be positive");
    }
    if (!(r.gamma > 0.0 && r.gamma <= 1.0)) {
        throw InvalidInput("gamma must lie in (0, 1]");
    }
    if (!(r.collective_guard >= 0.0)) {
        throw InvalidInput("collective guard must be nonnegative");
    }
    if (r.min_seg_len < 2) {
        throw InvalidInput("minimum segment length must be at least 2");
    }
    if (r.max_seg_len != 0 && r.max_seg_len < r.min_seg_len) {
        throw InvalidInput("maximum segment length is below the minimum segment length");
    }
    return r;
}

/// Segment (start, end]: positions start+1..end of the original series.
struct CollectiveAnomaly {
    std::size_t start = 0;
    std::size_t end = 0;
    double mean = 0.0;     ///< in data units
    double variance = 0.0; ///< maximum-likelihood variance, in data units
    double delta_mu = 0.0;
    double delta_sigma_sq = 0.0;
    double delta = 0.0;
    double saving = 0.0; ///< typical cost minus segment cost over the segment, penalty excluded

    friend bool operator==(const CollectiveAnomaly&, const CollectiveAnomaly&) = default;
};

struct PointAnomaly {
    std::size_t index = 0; ///< 1-based position in the original series
    double value = 0.0;
    double standardized_sq_residual = 0.0;

    friend bool operator==(const PointAnomaly&, const PointAnomaly&) = default;
};

struct DetectionStats {
    std::size_t final_candidates = 0;
    std::size_t max_candidates = 0;
    std::uint64_t segment_evaluations = 0;

    friend bool operator==(const DetectionStats&, const DetectionStats&) = default;
};

struct Detection {
    std::vector<CollectiveAnomaly> collective;
    std::vector<PointAnomaly> points;
    TypicalParams params;
    ResolvedConfig config;
    double total_cost = 0.0;
    std::size_t n = 0; ///< number of observed (non-missing) values
    DetectionStats stats;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Signal strengths of a segment with mean `mean` and standard deviation `sd`
/// against a typical distribution (mu0, sigma0).
struct SignalStrength {
    double delta_mu = 0.0;
    double delta_sigma_sq = 0.0;
    double delta = 0.0;
};

inline SignalStrength signal_strength(double mean, double sd, double mu0 = 0.0, double sigma0 = 1.0) {
    SignalStrength s;
    s.delta_mu = std::abs(mean - mu0) / std::sqrt(sd * sigma0);
    s.delta_sigma_sq = sd / sigma0 + sigma0 / sd - 2.0;
    s.delta = std::log(1.0 + 0.5 * s.delta_sigma_sq + 0.25 * s.delta_mu * s.delta_mu);
    return s;
}

/// Threshold K on the squared standardized residual: typical points satisfy
/// x^2 < K and points with x^2 > K are never labelled typical. Solves
/// K - 1 - log(K + gamma) = beta' on the increasing branch.
inline double proposition3_threshold(double beta_prime, double gamma) {
    if (!(beta_prime >= 0.0) || !(gamma <= 1.0) || !(gamma >= std::exp(-beta_prime))) {
        throw InvalidInput("threshold requires beta' >= 0 and exp(-beta') <= gamma <= 1");
    }
    auto f = [&](double k) { return k - 1.0 - std::log(k + gamma) - beta_prime; };
    double lo = beta_prime;
    double hi = beta_prime + 1.0 + std::sqrt(2.0 * (beta_prime + gamma));
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Penalties {
    double beta = 0.0;
    double beta_prime = 0.0;
};

/// Penalties bounding the false-positive probability under i.i.d. Gaussian data
/// with known parameters by C1 n e^-t + C2 (n e^-t)^2.
inline Penalties fp_control_penalties(std::size_t n, double t) {
    if (n < 2 || !(t > 0.0)) {
        throw InvalidInput("false-positive control needs n >= 2 and t > 0");
    }
    return {2.0 * (2.0 + 2.0 * t + 2.0 * std::sqrt(2.0 * t)), 2.0 * t};
}

/// A potential start k of a collective segment k+1..m. `expires_at` is the
/// first step at which the candidate is no longer considered.
struct Candidate {
    static constexpr std::size_t never = std::numeric_limits<std::size_t>::max();

    std::size_t start = 0;
    std::size_t expires_at = never;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

namespace detail {

enum class Choice : std::uint8_t { typical, point, collective };

// Collective option value C(k) + cost(k+1..m) for candidate k at step m, or
// NaN when the segment is ineligible or degenerate.
inline double segment_option(const cost::PrefixStats& p, std::span<const double> C, std::size_t k, std::size_t m,
                             const ResolvedConfig& cfg) {
    const std::size_t len = m - k;
    if (len < cfg.min_seg_len || (cfg.max_seg_len != 0 && len > cfg.max_seg_len)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto s = p.unchecked(k, m);
    const double v = s.mean_sq_dev + cfg.collective_guard;
    if (!(v > 0.0)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return C[k] + static_cast<double>(len) * (std::log(v) + 1.0);
}

// Flags candidates whose option value at step m is >= C(m); they expire at
// m + min_seg_len. Then drops every candidate already expired at `next`.
inline void flag_and_expire(std::vector<Candidate>& cands, std::span<const double> option, double cm, std::size_t m,
                            std::size_t next, const ResolvedConfig& cfg) {
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (cands[i].expires_at == Candidate::never && option[i] >= cm) {
            cands[i].expires_at = m + cfg.min_seg_len;
        }
    }
    std::erase_if(cands, [&](const Candidate& c) {
        return c.expires_at <= next || (cfg.max_seg_len != 0 && next - c.start > cfg.max_seg_len);
    });
}

} // namespace detail

/// One pruning pass at step m, after C(m) is known. Candidates dominated at
/// step m are scheduled for removal at m + min_seg_len; candidates whose
/// removal step is m + 1 or earlier are erased.
inline void prune_candidates(std::vector<Candidate>& cands, std::span<const double> C, std::size_t m,
                             const cost::PrefixStats& p, const ResolvedConfig& cfg) {
    if (m >= C.size() || m > p.size()) {
        throw InvalidInput("pruning step beyond the cost array");
    }
    std::vector<double> option(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        option[i] = cands[i].start < m ? detail::segment_option(p, C, cands[i].start, m, cfg)
                                       : std::numeric_limits<double>::quiet_NaN();
    }
    detail::flag_and_expire(cands, option, C[m], m, m + 1, cfg);
}

namespace detail {

struct Labeling {
    std::vector<std::pair<std::size_t, std::size_t>> segments; // (k, m] in compact 1-based indices
    std::vector<std::size_t> points;                           // compact 1-based indices
};

struct Prepared {
    Observed obs;
    std::vector<double> x; // standardized observed values
    TypicalParams params;
    ResolvedConfig cfg;
};

inline Prepared prepare(const Series& series, const CapaConfig& config) {
    Prepared p;
    p.obs = observed(series);
    if (p.obs.size() < std::max<std::size_t>(config.min_seg_len, 1)) {
        throw InvalidInput("series has " + std::to_string(p.obs.size()) + " observed values, fewer than the " +
                           "minimum segment length " + std::to_string(config.min_seg_len));
    }
    p.params = config.known_params ? *config.known_params : robust::estimate(p.obs.values, config.scale);
    if (!(p.params.sigma0 > 0.0) || !std::isfinite(p.params.mu0)) {
        throw InvalidInput("typical parameters need a finite mean and sigma0 > 0");
    }
    p.x = robust::standardize(p.obs.values, p.params);
    p.cfg = resolve(config, p.obs.size());
    return p;
}

// Two-pass mean and mean squared deviation of x[k..m-1].
inline cost::SegmentStats two_pass_stats(std::span<const double> x, std::size_t k, std::size_t m) {
    const auto len = static_cast<double>(m - k);
    double mean = 0.0;
    for (std::size_t t = k; t < m; ++t) {
        mean += x[t];
    }
    mean /= len;
    double ss = 0.0;
    for (std::size_t t = k; t < m; ++t) {
        ss += (x[t] - mean) * (x[t] - mean);
    }
    return {m - k, mean, ss / len};
}

// Builds the result for a labeling. The total cost is re-evaluated from the
// labeling with two-pass segment statistics, which avoids the cancellation of
// the prefix-sum variance on near-constant segments.
inline Detection annotate(const Prepared& p, const Labeling& lab) {
    Detection d;
    d.params = p.params;
    d.config = p.cfg;
    d.n = p.x.size();
    std::vector<bool> typical_index(p.x.size(), true);
    double total = 0.0;
    for (auto [k, m] : lab.segments) {
        const auto s = two_pass_stats(p.x, k, m);
        const double var = s.mean_sq_dev + p.cfg.collective_guard;
        double typical = 0.0;
        for (std::size_t t = k; t < m; ++t) {
            typical += cost::typical_cost(p.x[t]);
            typical_index[t] = false;
        }
        const double seg_cost = static_cast<double>(s.len) * (std::log(var) + 1.0);
        total += seg_cost + p.cfg.beta;
        const auto strength = signal_strength(s.mean, std::sqrt(var));
        CollectiveAnomaly a;
        a.start = p.obs.original(k + 1) - 1;
        a.end = p.obs.original(m);
        a.mean = p.params.mu0 + p.params.sigma0 * s.mean;
        a.variance = p.params.sigma0 * p.params.sigma0 * s.mean_sq_dev;
        a.delta_mu = strength.delta_mu;
        a.delta_sigma_sq = strength.delta_sigma_sq;
        a.delta = strength.delta;
        a.saving = typical - seg_cost;
        d.collective.push_back(a);
    }
    for (std::size_t t : lab.points) {
        const double z = p.x[t - 1];
        total += cost::point_anomaly_cost(z, p.cfg.gamma) + p.cfg.beta_prime;
        typical_index[t - 1] = false;
        d.points.push_back({p.obs.original(t), p.obs.values[t - 1], z * z});
    }
    for (std::size_t t = 0; t < p.x.size(); ++t) {
        if (typical_index[t]) {
            total += cost::typical_cost(p.x[t]);
        }
    }
    d.total_cost = total;
    return d;
}

} // namespace detail

/// Minimizes the penalized cost over all labelings of the observed values.
///
/// At equal cost the typical option is preferred over a point anomaly, and a
/// point anomaly over a collective one; among collective options the latest
/// start (shortest segment) wins.
inline Detection detect(const Series& series, const CapaConfig& config = {}) {
    using detail::Choice;
    const auto prep = detail::prepare(series, config);
    const auto& x = prep.x;
    const auto& cfg = prep.cfg;
    const std::size_t n = x.size();
    const cost::PrefixStats prefix(x);

    std::vector<double> C(n + 1, 0.0);
    std::vector<Choice> choice(n + 1, Choice::typical);
    std::vector<std::size_t> seg_start(n + 1, 0);
    std::vector<Candidate> cands{{0}};
    std::vector<double> option;
    DetectionStats stats;

    for (std::size_t m = 1; m <= n; ++m) {
        const double xm = x[m - 1];
        double best = C[m - 1] + cost::typical_cost(xm);
        Choice pick = Choice::typical;
        const double point = C[m - 1] + cost::point_anomaly_cost(xm, cfg.gamma) + cfg.beta_prime;
        if (point < best) {
            best = point;
            pick = Choice::point;
        }

        option.assign(cands.size(), std::numeric_limits<double>::quiet_NaN());
        double best_seg = std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            const std::size_t k = cands[i].start;
            if (m - k < cfg.min_seg_len) {
                continue;
            }
            option[i] = detail::segment_option(prefix, C, k, m, cfg);
            ++stats.segment_evaluations;
            // candidates are in ascending order, so <= keeps the latest start on ties
            if (option[i] <= best_seg) {
                best_seg = option[i];
                best_k = k;
            }
        }
        if (best_seg + cfg.beta < best) {
            best = best_seg + cfg.beta;
            pick = Choice::collective;
        }
        C[m] = best;
        choice[m] = pick;
        seg_start[m] = best_k;

        if (cfg.pruning) {
            detail::flag_and_expire(cands, option, C[m], m, m + 1, cfg);
        } else if (cfg.max_seg_len != 0) {
            std::erase_if(cands, [&](const Candidate& c) { return m + 1 - c.start > cfg.max_seg_len; });
        }
        cands.push_back({m});
        stats.max_candidates = std::max(stats.max_candidates, cands.size());
    }
    stats.final_candidates = cands.size();

    detail::Labeling lab;
    for (std::size_t m = n; m > 0;) {
        switch (choice[m]) {
        case Choice::typical:
            --m;
            break;
        case Choice::point:
            lab.points.push_back(m);
            --m;
            break;
        case Choice::collective:
            lab.segments.emplace_back(seg_start[m], m);
            m = seg_start[m];
            break;
        }
    }
    std::reverse(lab.segments.begin(), lab.segments.end());
    std::reverse(lab.points.begin(), lab.points.end());

    auto d = detail::annotate(prep, lab);
    d.stats = stats;
    return d;
}

/// Brute-force minimizer over every labeling, for validation on short series
/// (at most 14 observed values). With a zero collective guard, any
/// zero-variance candidate segment raises DegenerateSegment.
///
/// Labelings are enumerated backwards from the last observation in the order
/// typical, point, then segments from shortest to longest, keeping the first
/// strictly cheaper one. This reproduces the tie-breaking of detect().
inline Detection exhaustive_detect(const Series& series, const CapaConfig& config = {}) {
    constexpr std::size_t max_n = 14;
    const auto prep = detail::prepare(series, config);
    const auto& x = prep.x;
    const auto& cfg = prep.cfg;
    const std::size_t n = x.size();
    if (n > max_n) {
        throw InvalidInput("exhaustive search is limited to " + std::to_string(max_n) + " observations");
    }

    auto segment_cost = [&](std::size_t k, std::size_t m) {
        const auto st = detail::two_pass_stats(x, k, m);
        const auto len = static_cast<double>(st.len);
        const double v = st.mean_sq_dev + cfg.collective_guard;
        if (!(v > 0.0)) {
            throw DegenerateSegment("zero-variance segment (" + std::to_string(k) + ", " + std::to_string(m) +
                                    "] with no collective guard");
        }
        return len * (std::log(v) + 1.0) + cfg.beta;
    };

    double best = std::numeric_limits<double>::infinity();
    detail::Labeling best_lab;
    detail::Labeling cur;

    auto search = [&](auto&& self, std::size_t m, double acc) -> void {
        if (m == 0) {
            if (acc < best) {
                best = acc;
                best_lab = cur;
            }
            return;
        }
        const double xm = x[m - 1];
        self(self, m - 1, acc + cost::typical_cost(xm));
        cur.points.push_back(m);
        self(self, m - 1, acc + cost::point_anomaly_cost(xm, cfg.gamma) + cfg.beta_prime);
        cur.points.pop_back();
        const std::size_t longest = cfg.max_seg_len == 0 ? m : std::min(m, cfg.max_seg_len);
        for (std::size_t len = cfg.min_seg_len; len <= longest; ++len) {
            cur.segments.emplace_back(m - len, m);
            self(self, m - len, acc + segment_cost(m - len, m));
            cur.segments.pop_back();
        }
    };
    search(search, n, 0.0);

    std::reverse(best_lab.segments.begin(), best_lab.segments.end());
    std::reverse(best_lab.points.begin(), best_lab.points.end());
    return detail::annotate(prep, best_lab);
}

} // namespace capa
