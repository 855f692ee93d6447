#pragma once

// One-parameter sweeps: stationary covariance traces and/or Monte-Carlo mean J per value.

#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "wsan/analysis.hpp"
#include "wsan/baselines.hpp"
#include "wsan/harness/config.hpp"
#include "wsan/harness/experiment.hpp"
#include "wsan/jump_model.hpp"

namespace wsan::harness {

enum class SweepMode { stationary, monte_carlo, both };

inline SweepMode parse_sweep_mode(const std::string& s) {
    if (s == "stationary") return SweepMode::stationary;
    if (s == "montecarlo" || s == "monte_carlo") return SweepMode::monte_carlo;
    if (s == "both") return SweepMode::both;
    throw ConfigInvalid("unknown sweep mode '" + s + "'");
}

struct SweepRow {
    double value = 0.0;
    double trace_adaptive = std::numeric_limits<double>::quiet_NaN();
    double trace_baseline = std::numeric_limits<double>::quiet_NaN();  // actuator-fixed
    std::vector<ArchitectureStats> monte_carlo;
};

/// Copy of `cfg` with one parameter replaced: p or q (i.i.d. networks, q sets every
/// feedback link), r (obstacle network) or horizon.
inline ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& name, double value) {
    ExperimentConfig out = cfg;
    json doc = cfg.source;
    if (name == "horizon") {
        if (value < 0 || value != std::floor(value)) throw ConfigInvalid("sweep: horizon must be a non-negative integer");
        out.horizon = static_cast<std::size_t>(value);
    } else if (name == "p" || name == "q") {
        const auto* iid = std::get_if<IidNetworkModel>(&cfg.network_model());
        if (!iid) throw ConfigInvalid("sweep: parameter '" + name + "' needs an iid network");
        std::vector<double> q;
        for (int i = 1; i < cfg.M; ++i) q.push_back(name == "q" ? value : iid->q(i));
        const double p = name == "p" ? value : iid->p();
        try {
            out.network = IidNetworkModel(cfg.M, p, q);
        } catch (const Error& e) {
            throw ConfigInvalid(std::string("sweep: ") + e.what());
        }
        doc["network"][name] = value;
    } else if (name == "r") {
        if (cfg.network_name != "obstacle") throw ConfigInvalid("sweep: parameter 'r' needs the obstacle network");
        try {
            out.network = obstacle_network(value, cfg.M);
        } catch (const Error& e) {
            throw ConfigInvalid(std::string("sweep: ") + e.what());
        }
        doc["network"]["r"] = value;
    } else {
        throw ConfigInvalid("sweep: unknown parameter '" + name + "'");
    }
    out.source = normalised(out, doc);
    return out;
}

/// Plant-state trace of the stationary covariance for the adaptive loop and the
/// actuator-fixed loop; NaN where the recursion does not settle.
inline std::pair<double, double> stationary_traces(const ExperimentConfig& cfg, const MeanOptions& mean_opts = {}) {
    const MarkovNetworkModel net = as_markov(cfg.network_model());
    const JumpLinearModel model(cfg.plant_model(), cfg.gains, cfg.M);
    const Matrix W = noise_covariance(cfg.plant_model());
    const Index n = cfg.plant_model().n();
    auto trace_of = [&](const std::vector<ConditionalMeans>& means) {
        try {
            return stationary_covariance(means, net, W, n, CovarianceMethod::fixed_point).trace_plant;
        } catch (const NotConverged&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    MeanOptions mo = mean_opts;
    if (model.mode_count() > mo.max_exact_modes) mo.mode = MeanOptions::Mode::sampling;
    const double adaptive = trace_of(conditional_mean_matrices(model, net, mo));
    const double baseline = trace_of(actuator_fixed_means(cfg.plant_model(), cfg.gains, net));
    return {adaptive, baseline};
}

inline std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& parameter,
                                   const std::vector<double>& values, SweepMode mode, unsigned threads = 1) {
    std::vector<SweepRow> rows;
    for (double v : values) {
        const ExperimentConfig c = with_parameter(cfg, parameter, v);
        SweepRow row;
        row.value = v;
        if (mode != SweepMode::monte_carlo) std::tie(row.trace_adaptive, row.trace_baseline) = stationary_traces(c);
        if (mode != SweepMode::stationary) row.monte_carlo = aggregate(c, run_experiment(c, threads));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace wsan::harness
