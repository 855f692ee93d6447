#pragma once

// Serialisation: CSV traces and tables, JSON summaries.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include "wsan/harness/config.hpp"
#include "wsan/harness/experiment.hpp"
#include "wsan/harness/sweep.hpp"
#include "wsan/protocol.hpp"

namespace wsan::harness {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_trace_header(std::ostream& os, const std::string& hash, int M, Index n, Index m, Index p, bool markov) {
    os << "# config_hash=" << hash << " format=" << kFormatVersion << '\n';
    os << "run,architecture,k";
    if (markov) os << ",xi";
    for (int i = 1; i < M; ++i) os << ",gamma" << i;
    for (int i = 1; i < M; ++i) os << ",delta" << i;
    os << ",c";
    for (Index i = 0; i < m; ++i) os << ",u" << i + 1;
    for (Index i = 0; i < p; ++i) os << ",y" << i + 1;
    for (Index i = 0; i < n; ++i) os << ",x" << i + 1;
    for (int i = 1; i <= M; ++i) os << ",err" << i;
    os << '\n';
}

/// One row per step. err<i> is ‖x_k − x̂_k^(i)‖ after the measurement update; the
/// fixed-placement loops fill only the column of the node hosting their estimator.
inline void write_trace_rows(std::ostream& os, const RunSummary& run, const std::vector<StepRecord>& trace, int M,
                             bool markov) {
    for (const auto& rec : trace) {
        os << run.run << ',' << to_string(run.architecture) << ',' << rec.k;
        if (markov) os << ',' << rec.network_state + 1;
        for (auto b : rec.gamma) os << ',' << int(b);
        for (auto b : rec.delta) os << ',' << int(b);
        os << ',' << rec.roles.controller;
        for (Index i = 0; i < rec.u.size(); ++i) os << ',' << format_double(rec.u(i));
        for (Index i = 0; i < rec.y.size(); ++i) os << ',' << format_double(rec.y(i));
        for (Index i = 0; i < rec.x.size(); ++i) os << ',' << format_double(rec.x(i));
        for (int i = 1; i <= M; ++i) {
            os << ',';
            if (rec.xhats.size() == static_cast<std::size_t>(M)) {
                os << format_double((rec.x - rec.xhats[static_cast<std::size_t>(i - 1)]).norm());
            } else if (!rec.xhats.empty()) {
                const int host = run.architecture == Architecture::actuator_fixed ? M : 1;
                if (i == host) os << format_double((rec.x - rec.xhats.front()).norm());
            }
        }
        os << '\n';
    }
}

inline json run_json(const RunSummary& r) {
    json j;
    j["run"] = r.run;
    j["architecture"] = std::string(to_string(r.architecture));
    j["J"] = number_or_null(r.J);
    j["diverged"] = r.diverged;
    if (r.diverged) j["diverged_at"] = r.diverged_at;
    j["steps"] = r.steps;
    j["c_histogram"] = std::vector<std::uint64_t>(r.c_histogram.begin() + 1, r.c_histogram.end());
    if (!r.state_histogram.empty()) {
        json s = json::array();
        for (const auto& h : r.state_histogram) s.push_back(std::vector<std::uint64_t>(h.begin() + 1, h.end()));
        j["state_c_histogram"] = s;
    }
    j["covariance"] = matrix_json(r.covariance);
    return j;
}

inline json stats_json(const ArchitectureStats& s) {
    json j;
    j["architecture"] = std::string(to_string(s.architecture));
    j["runs"] = s.runs;
    j["diverged"] = s.diverged;
    j["mean_J"] = number_or_null(s.mean_J);
    j["stddev_J"] = number_or_null(s.stddev_J);
    j["c_histogram"] = std::vector<std::uint64_t>(s.c_histogram.begin() + 1, s.c_histogram.end());
    return j;
}

inline json summary_json(const ExperimentConfig& cfg, const std::vector<RunSummary>& runs, bool include_runs = true) {
    json j;
    j["format"] = kFormatVersion;
    j["config_hash"] = config_hash(cfg.source);
    j["config"] = cfg.source;
    json agg = json::array();
    for (const auto& s : aggregate(cfg, runs)) agg.push_back(stats_json(s));
    j["architectures"] = agg;
    if (include_runs) {
        json rs = json::array();
        for (const auto& r : runs) rs.push_back(run_json(r));
        j["runs"] = rs;
    }
    return j;
}

inline void write_sweep_csv(std::ostream& os, const std::string& hash, const std::string& parameter,
                            const std::vector<SweepRow>& rows) {
    os << "# config_hash=" << hash << " format=" << kFormatVersion << '\n';
    os << parameter << ",trace_plant_adaptive,trace_plant_actuator_fixed";
    if (!rows.empty())
        for (const auto& s : rows.front().monte_carlo)
            os << ",mean_J_" << to_string(s.architecture) << ",diverged_" << to_string(s.architecture);
    os << '\n';
    for (const auto& r : rows) {
        os << format_double(r.value) << ',' << format_double(r.trace_adaptive) << ',' << format_double(r.trace_baseline);
        for (const auto& s : r.monte_carlo) os << ',' << format_double(s.mean_J) << ',' << s.diverged;
        os << '\n';
    }
}

inline json sweep_json(const std::string& hash, const std::string& parameter, const std::vector<SweepRow>& rows) {
    json j;
    j["format"] = kFormatVersion;
    j["config_hash"] = hash;
    j["parameter"] = parameter;
    json arr = json::array();
    for (const auto& r : rows) {
        json row;
        row["value"] = r.value;
        row["trace_plant_adaptive"] = number_or_null(r.trace_adaptive);
        row["trace_plant_actuator_fixed"] = number_or_null(r.trace_baseline);
        json mc = json::array();
        for (const auto& s : r.monte_carlo) mc.push_back(stats_json(s));
        if (!mc.empty()) row["monte_carlo"] = mc;
        arr.push_back(std::move(row));
    }
    j["rows"] = arr;
    return j;
}

}  // namespace wsan::harness
