#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "capa/error.hpp"

namespace capa {

inline constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Ordered observations. A NaN value marks a missing observation. `times`
/// is either empty or has one entry per value.
struct Series {
    std::vector<double> values;
    std::vector<double> times;

    Series() = default;
    explicit Series(std::vector<double> v) : values(std::move(v)) {}
    Series(std::vector<double> v, std::vector<double> t) : values(std::move(v)), times(std::move(t)) {
        if (!times.empty() && times.size() != values.size()) {
            throw InvalidInput("series times and values differ in length");
        }
    }

    std::size_t size() const { return values.size(); }
    bool has_times() const { return !times.empty(); }

    friend bool operator==(const Series&, const Series&) = default;
};

/// The non-missing part of a series together with the 1-based position each
/// kept value had in the original series.
struct Observed {
    std::vector<double> values;
    std::vector<std::size_t> positions;

    std::size_t size() const { return values.size(); }

    /// Original position of compacted 1-based index `i`; 0 maps to 0.
    std::size_t original(std::size_t i) const { return i == 0 ? 0 : positions[i - 1]; }
};

/// Drops missing entries. Infinite values are rejected.
inline Observed observed(const Series& s) {
    Observed out;
    out.values.reserve(s.size());
    out.positions.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double v = s.values[i];
        if (is_missing(v)) {
            continue;
        }
        if (!std::isfinite(v)) {
            throw InvalidInput("series contains a non-finite value at position " + std::to_string(i + 1));
        }
        out.values.push_back(v);
        out.positions.push_back(i + 1);
    }
    return out;
}

} // namespace capa
