#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "capa/error.hpp"
#include "capa/series.hpp"

namespace capa {

/// Mean and standard deviation of the typical (non-anomalous) distribution.
struct TypicalParams {
    double mu0 = 0.0;
    double sigma0 = 1.0;

    friend bool operator==(const TypicalParams&, const TypicalParams&) = default;
};

namespace robust {

/// IQR of a standard normal, 2 * Phi^-1(0.75), to four significant figures.
inline constexpr double normal_iqr = 1.349;

enum class ScaleConvention {
    normal_consistent, ///< IQR / 1.349, consistent for the standard deviation of Gaussian data
    raw_iqr,           ///< IQR without the consistency constant
};

namespace detail {

inline std::vector<double> sorted_finite(std::span<const double> values) {
    if (values.empty()) {
        throw InvalidInput("robust estimate of an empty sample");
    }
    std::vector<double> v(values.begin(), values.end());
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw InvalidInput("robust estimate of a sample with non-finite values");
        }
    }
    std::sort(v.begin(), v.end());
    return v;
}

// Linear interpolation between the closest order statistics ("type 7").
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace detail

inline double quantile(std::span<const double> values, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidInput("quantile probability outside [0, 1]");
    }
    return detail::sorted_quantile(detail::sorted_finite(values), p);
}

inline double median(std::span<const double> values) {
    const auto v = detail::sorted_finite(values);
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double iqr(std::span<const double> values) {
    const auto v = detail::sorted_finite(values);
    return detail::sorted_quantile(v, 0.75) - detail::sorted_quantile(v, 0.25);
}

/// Robust standard deviation from the interquartile range. Throws
/// DegenerateScale when the IQR vanishes.
inline double robust_sigma(std::span<const double> values,
                           ScaleConvention convention = ScaleConvention::normal_consistent) {
    const auto v = detail::sorted_finite(values);
    if (v.front() == v.back()) {
        throw DegenerateScale("robust scale needs at least two distinct values");
    }
    const double range = detail::sorted_quantile(v, 0.75) - detail::sorted_quantile(v, 0.25);
    if (!(range > 0.0)) {
        throw DegenerateScale("interquartile range is zero; the typical scale cannot be estimated");
    }
    return convention == ScaleConvention::raw_iqr ? range : range / normal_iqr;
}

/// Median and robust sigma of the non-missing values of `s`.
inline TypicalParams estimate(const Series& s, ScaleConvention convention = ScaleConvention::normal_consistent) {
    const auto obs = observed(s);
    return {median(obs.values), robust_sigma(obs.values, convention)};
}

inline TypicalParams estimate(std::span<const double> values,
                              ScaleConvention convention = ScaleConvention::normal_consistent) {
    return {median(values), robust_sigma(values, convention)};
}

/// (x - mu0) / sigma0 for every value; missing markers and times are kept.
inline Series standardize(const Series& s, const TypicalParams& params) {
    if (!(params.sigma0 > 0.0)) {
        throw InvalidInput("standardize requires sigma0 > 0");
    }
    Series out = s;
    for (double& v : out.values) {
        if (!is_missing(v)) {
            v = (v - params.mu0) / params.sigma0;
        }
    }
    return out;
}

inline std::vector<double> standardize(std::span<const double> values, const TypicalParams& params) {
    if (!(params.sigma0 > 0.0)) {
        throw InvalidInput("standardize requires sigma0 > 0");
    }
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) {
        v = (v - params.mu0) / params.sigma0;
    }
    return out;
}

} // namespace robust
} // namespace capa
