#pragma once

// CSV ingestion and JSON/CSV serialization of detection results.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "capa/classic.hpp"
#include "capa/detect.hpp"
#include "capa/error.hpp"
#include "capa/series.hpp"
#include "capa/simulate.hpp"
#include "capa/transit.hpp"

namespace capa {

namespace io {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

struct Row {
    std::size_t line = 0;
    std::optional<double> time;
    double value = missing_value; // NaN when the cell is blank
};

// Reads one or two numeric columns. A first line that does not parse is a
// header. Blank value cells are missing; any other unparseable row is an error.
inline std::vector<Row> read_rows(std::istream& in, bool require_time) {
    std::vector<Row> rows;
    std::vector<std::size_t> bad;
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::size_t> columns;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty()) {
            continue;
        }
        const auto cells = split(text);
        Row row;
        row.line = lineno;
        bool ok = cells.size() == 1 || cells.size() == 2;
        if (ok && require_time && cells.size() != 2) {
            ok = false;
        }
        if (ok && columns && *columns != cells.size()) {
            ok = false;
        }
        if (ok) {
            const auto& vcell = cells.back();
            if (cells.size() == 2) {
                row.time = parse_double(cells.front());
                ok = row.time.has_value();
            }
            if (ok && !vcell.empty()) {
                const auto v = parse_double(vcell);
                ok = v.has_value();
                if (ok) {
                    row.value = *v;
                }
            }
        }
        if (!ok) {
            if (rows.empty() && bad.empty() && !columns) {
                // header line
                columns = cells.size();
                continue;
            }
            bad.push_back(lineno);
            continue;
        }
        columns = cells.size();
        rows.push_back(row);
    }
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "unparseable rows at line" << (bad.size() > 1 ? "s " : " ");
        for (std::size_t i = 0; i < bad.size() && i < 20; ++i) {
            msg << (i ? ", " : "") << bad[i];
        }
        if (bad.size() > 20) {
            msg << " and " << bad.size() - 20 << " more";
        }
        throw InvalidInput(msg.str());
    }
    return rows;
}

} // namespace detail

/// A penalty given as an absolute value ("17.5") or a multiple of log n
/// ("4logn", "4*logn", "4log(n)", "logn").
inline double parse_penalty(std::string_view text, std::size_t n) {
    auto t = detail::trim(text);
    for (std::string_view suffix : {"log(n)", "logn"}) {
        if (t.size() >= suffix.size() && t.substr(t.size() - suffix.size()) == suffix) {
            auto coef = detail::trim(t.substr(0, t.size() - suffix.size()));
            if (!coef.empty() && coef.back() == '*') {
                coef = detail::trim(coef.substr(0, coef.size() - 1));
            }
            const auto c = coef.empty() ? std::optional<double>(1.0) : detail::parse_double(coef);
            if (!c || n < 2) {
                throw InvalidInput("cannot parse penalty '" + std::string(text) + "'");
            }
            return *c * std::log(static_cast<double>(n));
        }
    }
    const auto v = detail::parse_double(t);
    if (!v) {
        throw InvalidInput("cannot parse penalty '" + std::string(text) + "'");
    }
    return *v;
}

/// `value` or `time,value` rows; blank value cells are missing.
inline Series read_series_csv(std::istream& in) {
    const auto rows = detail::read_rows(in, false);
    Series s;
    const bool timed = !rows.empty() && rows.front().time.has_value();
    for (const auto& r : rows) {
        s.values.push_back(r.value);
        if (timed) {
            s.times.push_back(*r.time);
        }
    }
    return s;
}

/// `time_days,flux` rows; rows with blank flux are dropped.
inline transit::LightCurve read_light_curve_csv(std::istream& in) {
    transit::LightCurve c;
    for (const auto& r : detail::read_rows(in, true)) {
        if (!is_missing(r.value)) {
            c.times.push_back(*r.time);
            c.values.push_back(r.value);
        }
    }
    transit::validate(c, true);
    return c;
}

inline void write_collective_csv(std::ostream& out, const Detection& d) {
    out.precision(17);
    out << "start,end,mean,variance,delta_mu,delta_sigma_sq,delta,saving\n";
    for (const auto& a : d.collective) {
        out << a.start << ',' << a.end << ',' << a.mean << ',' << a.variance << ',' << a.delta_mu << ','
            << a.delta_sigma_sq << ',' << a.delta << ',' << a.saving << '\n';
    }
}

inline void write_points_csv(std::ostream& out, const Detection& d) {
    out.precision(17);
    out << "index,value,standardized_sq_residual\n";
    for (const auto& p : d.points) {
        out << p.index << ',' << p.value << ',' << p.standardized_sq_residual << '\n';
    }
}

/// `period,max_delta_mu`; failed periods have an empty second cell.
inline void write_period_scan_csv(std::ostream& out, const transit::PeriodScan& scan) {
    out.precision(12);
    out << "period,max_delta_mu\n";
    for (const auto& r : scan.records) {
        out << r.period << ',';
        if (r.max_delta_mu) {
            out << *r.max_delta_mu;
        }
        out << '\n';
    }
}

} // namespace io

// nlohmann::json conversions, found by argument-dependent lookup.

inline void to_json(nlohmann::json& j, const TypicalParams& p) { j = {{"mu0", p.mu0}, {"sigma0", p.sigma0}}; }
inline void from_json(const nlohmann::json& j, TypicalParams& p) {
    j.at("mu0").get_to(p.mu0);
    j.at("sigma0").get_to(p.sigma0);
}

inline void to_json(nlohmann::json& j, const ResolvedConfig& c) {
    j = {{"beta", c.beta},
         {"beta_prime", c.beta_prime},
         {"gamma", c.gamma},
         {"collective_guard", c.collective_guard},
         {"min_seg_len", c.min_seg_len},
         {"max_seg_len", c.max_seg_len == 0 ? nlohmann::json(nullptr) : nlohmann::json(c.max_seg_len)},
         {"pruning", c.pruning}};
}
inline void from_json(const nlohmann::json& j, ResolvedConfig& c) {
    j.at("beta").get_to(c.beta);
    j.at("beta_prime").get_to(c.beta_prime);
    j.at("gamma").get_to(c.gamma);
    j.at("collective_guard").get_to(c.collective_guard);
    j.at("min_seg_len").get_to(c.min_seg_len);
    c.max_seg_len = j.at("max_seg_len").is_null() ? 0 : j.at("max_seg_len").get<std::size_t>();
    j.at("pruning").get_to(c.pruning);
}

inline void to_json(nlohmann::json& j, const CollectiveAnomaly& a) {
    j = {{"start", a.start},       {"end", a.end},       {"mean", a.mean},
         {"variance", a.variance}, {"delta_mu", a.delta_mu}, {"delta_sigma_sq", a.delta_sigma_sq},
         {"delta", a.delta},       {"saving", a.saving}};
}
inline void from_json(const nlohmann::json& j, CollectiveAnomaly& a) {
    j.at("start").get_to(a.start);
    j.at("end").get_to(a.end);
    j.at("mean").get_to(a.mean);
    j.at("variance").get_to(a.variance);
    j.at("delta_mu").get_to(a.delta_mu);
    j.at("delta_sigma_sq").get_to(a.delta_sigma_sq);
    j.at("delta").get_to(a.delta);
    j.at("saving").get_to(a.saving);
}

inline void to_json(nlohmann::json& j, const PointAnomaly& p) {
    j = {{"index", p.index}, {"value", p.value}, {"standardized_sq_residual", p.standardized_sq_residual}};
}
inline void from_json(const nlohmann::json& j, PointAnomaly& p) {
    j.at("index").get_to(p.index);
    j.at("value").get_to(p.value);
    j.at("standardized_sq_residual").get_to(p.standardized_sq_residual);
}

inline void to_json(nlohmann::json& j, const DetectionStats& s) {
    j = {{"final_candidates", s.final_candidates},
         {"max_candidates", s.max_candidates},
         {"segment_evaluations", s.segment_evaluations}};
}
inline void from_json(const nlohmann::json& j, DetectionStats& s) {
    j.at("final_candidates").get_to(s.final_candidates);
    j.at("max_candidates").get_to(s.max_candidates);
    j.at("segment_evaluations").get_to(s.segment_evaluations);
}

inline void to_json(nlohmann::json& j, const Detection& d) {
    j = {{"n", d.n},
         {"total_cost", d.total_cost},
         {"params", d.params},
         {"config", d.config},
         {"collective", d.collective},
         {"points", d.points},
         {"stats", d.stats}};
}
inline void from_json(const nlohmann::json& j, Detection& d) {
    j.at("n").get_to(d.n);
    j.at("total_cost").get_to(d.total_cost);
    j.at("params").get_to(d.params);
    j.at("config").get_to(d.config);
    j.at("collective").get_to(d.collective);
    j.at("points").get_to(d.points);
    j.at("stats").get_to(d.stats);
}

namespace classic {
inline void to_json(nlohmann::json& j, const ChangepointResult& r) {
    j = {{"n", r.n}, {"changepoints", r.changepoints}, {"total_cost", r.total_cost}, {"penalty", r.penalty}};
}
} // namespace classic

} // namespace capa
