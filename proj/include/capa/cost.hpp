#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "capa/error.hpp"

namespace capa::cost {

struct SegmentStats {
    std::size_t len = 0;
    double mean = 0.0;
    double mean_sq_dev = 0.0; ///< sum of squared deviations from the mean, divided by len
};

/// Cumulative sums of x and x^2 for O(1) segment statistics. Intended for
/// standardized data, where magnitudes are bounded and cancellation is mild.
class PrefixStats {
public:
    PrefixStats() = default;

    explicit PrefixStats(std::span<const double> x) : sum_(x.size() + 1, 0.0), sumsq_(x.size() + 1, 0.0) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            sum_[i + 1] = sum_[i] + x[i];
            sumsq_[i + 1] = sumsq_[i] + x[i] * x[i];
        }
    }

    std::size_t size() const { return sum_.empty() ? 0 : sum_.size() - 1; }
    std::span<const double> cum_sum() const { return sum_; }
    std::span<const double> cum_sumsq() const { return sumsq_; }

    /// Statistics of x_i..x_j, 1-based and inclusive.
    SegmentStats segment(std::size_t i, std::size_t j) const {
        if (i < 1 || i > j || j > size()) {
            throw InvalidInput("segment [" + std::to_string(i) + ", " + std::to_string(j) +
                               "] outside 1.." + std::to_string(size()));
        }
        return unchecked(i - 1, j);
    }

    /// Statistics of x_{k+1}..x_m for 0 <= k < m <= n, without bounds checks.
    SegmentStats unchecked(std::size_t k, std::size_t m) const {
        const auto len = static_cast<double>(m - k);
        const double mean = (sum_[m] - sum_[k]) / len;
        const double msd = (sumsq_[m] - sumsq_[k]) / len - mean * mean;
        return {m - k, mean, std::max(0.0, msd)};
    }

private:
    std::vector<double> sum_;
    std::vector<double> sumsq_;
};

/// Negative log-likelihood (up to constants) of a standardized typical point.
inline double typical_cost(double x) { return x * x; }

/// Cost of a standardized point fitted as a variance-only anomaly of length
/// one, excluding its penalty.
inline double point_anomaly_cost(double x, double gamma) { return 1.0 + std::log(gamma + x * x); }

/// len * (log(guard + mean_sq_dev) + 1), excluding the penalty.
inline double collective_cost(const SegmentStats& s, double guard = 0.0) {
    if (s.len < 2) {
        throw InvalidInput("collective segment needs at least two points");
    }
    const double v = s.mean_sq_dev + guard;
    if (!(v > 0.0)) {
        throw DegenerateSegment("segment of length " + std::to_string(s.len) + " has zero variance");
    }
    return static_cast<double>(s.len) * (std::log(v) + 1.0);
}

/// Per-segment cost of the classical mean-and-variance changepoint model.
inline double classical_segment_cost(const SegmentStats& s) { return collective_cost(s, 0.0); }

} // namespace capa::cost
