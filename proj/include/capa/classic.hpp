#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "capa/cost.hpp"
#include "capa/detect.hpp"
#include "capa/error.hpp"
#include "capa/series.hpp"

namespace capa::classic {

/// t_1 < ... < t_K: the last positions of every segment but the final one,
/// as 1-based positions of the original series.
struct ChangepointResult {
    std::vector<std::size_t> changepoints;
    double total_cost = 0.0;
    double penalty = 0.0;
    std::size_t n = 0;

    friend bool operator==(const ChangepointResult&, const ChangepointResult&) = default;
};

struct PeltOptions {
    bool pruning = true;
};

/// alpha * log(n)^(1 + delta), the strengthened SIC penalty.
inline double sic_penalty(std::size_t n, double alpha, double delta) {
    return alpha * std::pow(std::log(static_cast<double>(n)), 1.0 + delta);
}

/// 4 log n.
inline double bic_penalty(std::size_t n) { return 4.0 * std::log(static_cast<double>(n)); }

/// Minimizes sum of classical_segment_cost over segments + penalty per
/// changepoint. Segments fit their own mean and variance. Ties go to the
/// latest last changepoint.
inline ChangepointResult pelt_detect(const Series& series, double penalty, std::size_t min_seg_len,
                                     PeltOptions options = {}) {
    if (min_seg_len < 2) {
        throw InvalidInput("minimum segment length must be at least 2");
    }
    if (!(penalty >= 0.0) || !std::isfinite(penalty)) {
        throw InvalidInput("penalty must be finite and nonnegative");
    }
    const auto obs = observed(series);
    const std::size_t n = obs.size();
    if (n < min_seg_len) {
        throw InvalidInput("series shorter than the minimum segment length");
    }

    // Centering keeps the prefix sums well conditioned and leaves every cost unchanged.
    const double centre = std::accumulate(obs.values.begin(), obs.values.end(), 0.0) / static_cast<double>(n);
    std::vector<double> x(obs.values);
    for (double& v : x) {
        v -= centre;
    }
    const cost::PrefixStats prefix(x);

    auto seg = [&](std::size_t s, std::size_t t) {
        const auto st = prefix.unchecked(s, t);
        if (!(st.mean_sq_dev > 0.0)) {
            throw DegenerateSegment("zero-variance segment (" + std::to_string(s) + ", " + std::to_string(t) + "]");
        }
        return static_cast<double>(st.len) * (std::log(st.mean_sq_dev) + 1.0);
    };

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> F(n + 1, inf);
    std::vector<std::size_t> last(n + 1, 0);
    F[0] = -penalty;
    std::vector<Candidate> cands{{0}};
    std::vector<double> option;

    for (std::size_t t = min_seg_len; t <= n; ++t) {
        option.assign(cands.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < cands.size(); ++i) {
            const std::size_t s = cands[i].start;
            if (t - s < min_seg_len || F[s] == inf) {
                continue;
            }
            option[i] = F[s] + seg(s, t);
            if (option[i] + penalty <= F[t]) {
                F[t] = option[i] + penalty;
                last[t] = s;
            }
        }
        if (options.pruning) {
            // F carries one penalty per segment, so s is dominated once F(s) + C(s+1..t) >= F(t)
            for (std::size_t i = 0; i < cands.size(); ++i) {
                if (cands[i].expires_at == Candidate::never && option[i] >= F[t]) {
                    cands[i].expires_at = t + min_seg_len;
                }
            }
            std::erase_if(cands, [&](const Candidate& c) { return c.expires_at <= t + 1; });
        }
        if (t + min_seg_len <= n) {
            cands.push_back({t});
        }
    }

    std::vector<std::size_t> bounds{n};
    for (std::size_t t = last[n]; t > 0; t = last[t]) {
        bounds.push_back(t);
    }
    bounds.push_back(0);
    std::reverse(bounds.begin(), bounds.end());

    // The reported cost is re-evaluated with two-pass segment statistics.
    ChangepointResult r;
    r.penalty = penalty;
    r.n = n;
    r.total_cost = -penalty;
    for (std::size_t i = 1; i < bounds.size(); ++i) {
        const auto st = capa::detail::two_pass_stats(x, bounds[i - 1], bounds[i]);
        r.total_cost += cost::classical_segment_cost(st) + penalty;
        if (i + 1 < bounds.size()) {
            r.changepoints.push_back(obs.original(bounds[i]));
        }
    }
    return r;
}

} // namespace capa::classic
