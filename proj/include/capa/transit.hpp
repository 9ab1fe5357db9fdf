#pragma once

// Period search for transits: fold a light curve at each trial period, bin it
// to a regular series, run detect() and keep the strongest change in mean.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "capa/detect.hpp"
#include "capa/error.hpp"
#include "capa/parallel.hpp"
#include "capa/series.hpp"

namespace capa::transit {

struct LightCurve {
    std::vector<double> times; ///< days
    std::vector<double> values;

    std::size_t size() const { return times.size(); }

    friend bool operator==(const LightCurve&, const LightCurve&) = default;
};

inline void validate(const LightCurve& c, bool require_increasing) {
    if (c.times.size() != c.values.size()) {
        throw InvalidInput("light curve times and values differ in length");
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!std::isfinite(c.times[i]) || !std::isfinite(c.values[i])) {
            throw InvalidInput("light curve contains a non-finite entry at row " + std::to_string(i + 1));
        }
        if (require_increasing && i > 0 && !(c.times[i] > c.times[i - 1])) {
            throw InvalidInput("light curve times must be strictly increasing");
        }
    }
}

/// Times modulo the period, stably sorted by folded time.
inline LightCurve phase_fold(const LightCurve& curve, double period) {
    if (!(period > 0.0)) {
        throw InvalidInput("period must be positive");
    }
    validate(curve, false);
    std::vector<double> folded(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        double t = std::fmod(curve.times[i], period);
        if (t < 0.0) {
            t += period;
        }
        folded[i] = t;
    }
    std::vector<std::size_t> order(curve.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return folded[a] < folded[b]; });
    LightCurve out;
    out.times.reserve(curve.size());
    out.values.reserve(curve.size());
    for (std::size_t i : order) {
        out.times.push_back(folded[i]);
        out.values.push_back(curve.values[i]);
    }
    return out;
}

inline std::size_t bin_count(double period, double bin_width) {
    return static_cast<std::size_t>(std::ceil(period / bin_width));
}

/// Averages a folded curve over bins [k w, (k+1) w) covering [0, period).
/// Empty bins are missing; `times` holds each bin's left edge.
inline Series bin_average(const LightCurve& folded, double bin_width, double period) {
    if (!(bin_width > 0.0) || !(period > 0.0)) {
        throw InvalidInput("bin width and period must be positive");
    }
    const std::size_t slots = bin_count(period, bin_width);
    std::vector<double> sum(slots, 0.0);
    std::vector<std::size_t> count(slots, 0);
    for (std::size_t i = 0; i < folded.size(); ++i) {
        const double t = folded.times[i];
        if (!(t >= 0.0)) {
            throw InvalidInput("folded times must be nonnegative");
        }
        const auto k = std::min(static_cast<std::size_t>(std::floor(t / bin_width)), slots - 1);
        sum[k] += folded.values[i];
        ++count[k];
    }
    Series out;
    out.values.resize(slots);
    out.times.resize(slots);
    for (std::size_t k = 0; k < slots; ++k) {
        out.values[k] = count[k] == 0 ? missing_value : sum[k] / static_cast<double>(count[k]);
        out.times[k] = static_cast<double>(k) * bin_width;
    }
    return out;
}

struct PeriodGrid {
    double start = 1.0;
    double end = 200.0;
    double step = 0.01;

    std::size_t size() const { return static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1; }
    double period(std::size_t i) const { return start + static_cast<double>(i) * step; }
};

struct PeriodRecord {
    double period = 0.0;
    std::optional<double> max_delta_mu; ///< unset when detection failed at this period
    std::optional<std::pair<std::size_t, std::size_t>> best_segment; ///< (start_bin, end_bin]
    std::string diagnostic;

    friend bool operator==(const PeriodRecord&, const PeriodRecord&) = default;
};

struct PeriodScan {
    std::vector<PeriodRecord> records;
    PeriodGrid grid;
    double bin_width = 0.0208;

    /// Record with the largest max_delta_mu; first one on ties.
    const PeriodRecord* strongest() const {
        const PeriodRecord* best = nullptr;
        for (const auto& r : records) {
            if (r.max_delta_mu && (!best || *r.max_delta_mu > *best->max_delta_mu)) {
                best = &r;
            }
        }
        return best;
    }
};

/// |mean_k - mu0| / sqrt(sd_k sigma0) from a segment's sample mean and
/// variance; a zero segment sd falls back to sigma0.
inline double mean_change_strength(const CollectiveAnomaly& a, const TypicalParams& p) {
    double sd = std::sqrt(a.variance);
    if (!(sd > 0.0)) {
        sd = p.sigma0;
    }
    return std::abs(a.mean - p.mu0) / std::sqrt(sd * p.sigma0);
}

inline PeriodRecord scan_period(const LightCurve& curve, double period, double bin_width, const CapaConfig& config) {
    PeriodRecord rec;
    rec.period = period;
    try {
        const auto binned = bin_average(phase_fold(curve, period), bin_width, period);
        const auto det = detect(binned, config);
        double best = 0.0;
        for (const auto& a : det.collective) {
            const double s = mean_change_strength(a, det.params);
            if (!rec.best_segment || s > best) {
                best = s;
                rec.best_segment = std::make_pair(a.start, a.end);
            }
        }
        rec.max_delta_mu = best;
    } catch (const Error& e) {
        rec.diagnostic = e.what();
    }
    return rec;
}

/// Independent per-period detections; the result does not depend on the
/// thread count.
inline PeriodScan scan_periods(const LightCurve& curve, const PeriodGrid& grid, double bin_width,
                               const CapaConfig& config = {}, unsigned threads = 1) {
    if (!(grid.start > 0.0) || !(grid.end >= grid.start) || !(grid.step > 0.0)) {
        throw InvalidInput("period grid needs 0 < start <= end and step > 0");
    }
    if (!(bin_width > 0.0)) {
        throw InvalidInput("bin width must be positive");
    }
    validate(curve, true);
    PeriodScan scan;
    scan.grid = grid;
    scan.bin_width = bin_width;
    scan.records.resize(grid.size());
    parallel_for(scan.records.size(), threads, [&](std::size_t i) {
        scan.records[i] = scan_period(curve, grid.period(i), bin_width, config);
    });
    return scan;
}

} // namespace capa::transit
