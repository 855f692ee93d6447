// wsan: command-line front end for the controller-placement library.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wsan/analysis.hpp"
#include "wsan/harness/config.hpp"
#include "wsan/harness/experiment.hpp"
#include "wsan/harness/io.hpp"
#include "wsan/harness/sweep.hpp"
#include "wsan/jump_model.hpp"

namespace fs = std::filesystem;
using namespace wsan;
using namespace wsan::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> steps;
    std::string out_dir;
    std::string format = "json";
    unsigned threads = 1;
};

ExperimentConfig load_config(const GlobalOptions& g) {
    if (g.config_path.empty()) throw ConfigInvalid("--config is required");
    std::ifstream in(g.config_path);
    if (!in) throw ConfigInvalid("cannot open config file '" + g.config_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    ExperimentConfig cfg = parse_config_text(buf.str());
    apply_overrides(cfg, g.seed, g.runs, g.steps);
    return cfg;
}

/// Writes `text` to DIR/name when --out is given, to stdout otherwise.
void emit(const GlobalOptions& g, const std::string& name, const std::string& text) {
    if (g.out_dir.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(g.out_dir);
    const fs::path path = fs::path(g.out_dir) / name;
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    std::cerr << "wrote " << path.string() << '\n';
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    return s + '\n';
}

std::string hash_comment(const ExperimentConfig& cfg) {
    return "# config_hash=" + config_hash(cfg.source) + " format=" + kFormatVersion + '\n';
}

void write_matrix_csv(std::ostringstream& os, const std::string& name, const Matrix& m) {
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            os << name << ',' << r + 1 << ',' << c + 1 << ',' << format_double(m(r, c)) << '\n';
}

int cmd_design(const GlobalOptions& g) {
    const ExperimentConfig cfg = load_config(g);
    const PlantModel& plant = cfg.plant_model();
    const StageCost cost = default_stage_cost(plant.n(), plant.m());
    const RiccatiSolution ctrl = solve_control_riccati(plant.A(), plant.B(), cost.Qc(), cost.Rc());
    const RiccatiSolution filt = solve_filter_riccati(plant.A(), plant.C(), plant.Q(), plant.R());
    const double rho_ctrl = spectral_radius(plant.A() + plant.B() * cfg.gains.L);
    const Matrix I = Matrix::Identity(plant.n(), plant.n());
    const double rho_est = spectral_radius((I - cfg.gains.K * plant.C()) * plant.A());
    if (g.format == "csv") {
        std::ostringstream os;
        os << hash_comment(cfg) << "name,row,col,value\n";
        write_matrix_csv(os, "L", cfg.gains.L);
        write_matrix_csv(os, "K", cfg.gains.K);
        write_matrix_csv(os, "P", ctrl.P);
        write_matrix_csv(os, "Sigma", filt.P);
        os << "rho_control,1,1," << format_double(rho_ctrl) << '\n';
        os << "rho_estimator,1,1," << format_double(rho_est) << '\n';
        emit(g, "design.csv", os.str());
    } else {
        json j;
        j["format"] = kFormatVersion;
        j["config_hash"] = config_hash(cfg.source);
        j["L"] = matrix_json(cfg.gains.L);
        j["K"] = matrix_json(cfg.gains.K);
        j["P"] = matrix_json(ctrl.P);
        j["Sigma"] = matrix_json(filt.P);
        j["spectral_radius_control"] = rho_ctrl;
        j["spectral_radius_estimator"] = rho_est;
        emit(g, "design.json", j.dump(2) + '\n');
    }
    return kExitOk;
}

int cmd_simulate(const GlobalOptions& g, bool traces) {
    const ExperimentConfig cfg = load_config(g);
    const bool want_traces = traces || cfg.write_traces;
    const bool markov = std::holds_alternative<MarkovNetworkModel>(cfg.network_model());
    const std::string hash = config_hash(cfg.source);
    std::ostringstream trace_csv;
    TraceSink sink;
    if (want_traces) {
        const PlantModel& pl = cfg.plant_model();
        write_trace_header(trace_csv, hash, cfg.M, pl.n(), pl.m(), pl.p(), markov);
        sink = [&](const RunSummary& r, const std::vector<StepRecord>& t) { write_trace_rows(trace_csv, r, t, cfg.M, markov); };
    }
    const auto runs = run_experiment(cfg, g.threads, sink);
    if (want_traces) emit(g, "trace.csv", trace_csv.str());
    if (g.format == "csv") {
        std::ostringstream os;
        os << "# config_hash=" << hash << " format=" << kFormatVersion << '\n';
        os << "run,architecture,J,diverged,steps\n";
        for (const auto& r : runs)
            os << csv_line({std::to_string(r.run), std::string(to_string(r.architecture)), format_double(r.J),
                            r.diverged ? "1" : "0", std::to_string(r.steps)});
        emit(g, "summary.csv", os.str());
    } else {
        emit(g, "summary.json", summary_json(cfg, runs).dump(2) + '\n');
    }
    return kExitOk;
}

int cmd_analyze_location(const GlobalOptions& g, bool empirical) {
    ExperimentConfig cfg = load_config(g);
    const int M = cfg.M;
    std::vector<double> mu, inC, c;
    std::vector<std::vector<double>> per_state;
    if (const auto* iid = std::get_if<IidNetworkModel>(&cfg.network_model())) {
        const LocationDistribution d = location_distribution(*iid);
        mu = d.mu_prob;
        inC = d.inC_prob;
        c = d.c_prob;
    } else {
        const auto& mk = std::get<MarkovNetworkModel>(cfg.network_model());
        // Roles of step k depend on (δ_{k−1}, γ_k), both drawn under Ξ_k.
        mu.assign(static_cast<std::size_t>(M), 0.0);
        inC = c = mu;
        for (std::size_t s = 0; s < mk.state_count(); ++s) {
            const LocationDistribution d = brute_force_distribution(M, mk.marginals(s));
            const double w = mk.stationary()(static_cast<Index>(s));
            for (std::size_t i = 0; i < mu.size(); ++i) {
                mu[i] += w * d.mu_prob[i];
                inC[i] += w * d.inC_prob[i];
                c[i] += w * d.c_prob[i];
            }
            per_state.push_back(d.c_prob);
        }
    }
    std::vector<double> freq;
    if (empirical) {
        cfg.architectures = {Architecture::adaptive};
        cfg.source = normalised(cfg, cfg.source);
        const auto runs = run_experiment(cfg, g.threads);
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(M + 1), 0);
        std::uint64_t total = 0;
        for (const auto& r : runs)
            for (std::size_t i = 1; i < counts.size(); ++i) {
                counts[i] += r.c_histogram[i];
                total += r.c_histogram[i];
            }
        freq.assign(static_cast<std::size_t>(M), 0.0);
        for (std::size_t i = 1; i < counts.size(); ++i) freq[i - 1] = total ? double(counts[i]) / double(total) : 0.0;
    }
    if (g.format == "csv") {
        std::ostringstream os;
        os << hash_comment(cfg) << "node,mu,in_controller_set,controller";
        if (empirical) os << ",empirical";
        for (std::size_t s = 0; s < per_state.size(); ++s) os << ",controller_state" << s + 1;
        os << '\n';
        for (int i = 1; i <= M; ++i) {
            const auto k = static_cast<std::size_t>(i - 1);
            os << i << ',' << format_double(mu[k]) << ',' << format_double(inC[k]) << ',' << format_double(c[k]);
            if (empirical) os << ',' << format_double(freq[k]);
            for (const auto& ps : per_state) os << ',' << format_double(ps[k]);
            os << '\n';
        }
        emit(g, "location.csv", os.str());
    } else {
        json j;
        j["format"] = kFormatVersion;
        j["config_hash"] = config_hash(cfg.source);
        j["mu"] = mu;
        j["in_controller_set"] = inC;
        j["controller"] = c;
        if (empirical) j["empirical"] = freq;
        if (!per_state.empty()) {
            json ps = json::array();
            for (const auto& v : per_state) ps.push_back(v);
            j["controller_by_state"] = ps;
        }
        emit(g, "location.json", j.dump(2) + '\n');
    }
    return kExitOk;
}

int cmd_stationary_cov(const GlobalOptions& g, const std::string& method_name, bool sampling) {
    const ExperimentConfig cfg = load_config(g);
    CovarianceMethod method;
    if (method_name == "fixed_point") method = CovarianceMethod::fixed_point;
    else if (method_name == "linear_solve") method = CovarianceMethod::linear_solve;
    else throw ConfigInvalid("unknown covariance method '" + method_name + "'");
    const JumpLinearModel model(cfg.plant_model(), cfg.gains, cfg.M);
    const MarkovNetworkModel net = as_markov(cfg.network_model());
    MeanOptions mo;
    mo.seed = cfg.seed;
    if (sampling || model.mode_count() > mo.max_exact_modes) mo.mode = MeanOptions::Mode::sampling;
    const StationaryResult res = stationary_covariance(model, net, method, {}, mo);
    const double baseline = [&] {
        try {
            return stationary_covariance(actuator_fixed_means(cfg.plant_model(), cfg.gains, net), net,
                                         noise_covariance(cfg.plant_model()), cfg.plant_model().n(),
                                         CovarianceMethod::fixed_point)
                .trace_plant;
        } catch (const NotConverged&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }();
    if (g.format == "csv") {
        std::ostringstream os;
        os << hash_comment(cfg) << "name,row,col,value\n";
        write_matrix_csv(os, "plant_cov", res.plant_cov);
        os << "trace_plant,1,1," << format_double(res.trace_plant) << '\n';
        os << "trace_plant_actuator_fixed,1,1," << format_double(baseline) << '\n';
        for (std::size_t i = 0; i < res.residuals.size(); ++i)
            os << "residual," << i + 1 << ",1," << format_double(res.residuals[i]) << '\n';
        emit(g, "stationary.csv", os.str());
    } else {
        json j;
        j["format"] = kFormatVersion;
        j["config_hash"] = config_hash(cfg.source);
        j["method"] = method_name;
        j["means"] = mo.mode == MeanOptions::Mode::exact ? "exact" : "sampling";
        j["plant_cov"] = matrix_json(res.plant_cov);
        j["trace_plant"] = res.trace_plant;
        j["trace_plant_actuator_fixed"] = number_or_null(baseline);
        j["residuals"] = res.residuals;
        j["iterations"] = res.iterations;
        emit(g, "stationary.json", j.dump(2) + '\n');
    }
    return kExitOk;
}

int cmd_mss(const GlobalOptions& g, const std::string& method_name) {
    const ExperimentConfig cfg = load_config(g);
    MssMethod method;
    if (method_name == "spectral") method = MssMethod::spectral;
    else if (method_name == "iterate") method = MssMethod::iterate;
    else throw ConfigInvalid("unknown MSS method '" + method_name + "'");
    const JumpLinearModel model(cfg.plant_model(), cfg.gains, cfg.M);
    const MssVerdict v = mss_check(model, as_markov(cfg.network_model()), method);
    if (g.format == "csv") {
        std::ostringstream os;
        os << hash_comment(cfg) << "method,stable,spectral_radius,iterations,growth\n";
        os << csv_line({method_name, v.stable ? "1" : "0", format_double(v.spectral_radius), std::to_string(v.iterations),
                        format_double(v.growth)});
        emit(g, "mss.csv", os.str());
    } else {
        json j;
        j["format"] = kFormatVersion;
        j["config_hash"] = config_hash(cfg.source);
        j["method"] = method_name;
        j["stable"] = v.stable;
        j["spectral_radius"] = number_or_null(v.spectral_radius);
        j["iterations"] = v.iterations;
        j["growth"] = number_or_null(v.growth);
        j["certificate"] = v.certificate;
        emit(g, "mss.json", j.dump(2) + '\n');
    }
    return kExitOk;
}

std::vector<double> parse_values(const std::string& values, const std::string& range) {
    std::vector<double> out;
    auto number = [](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size()) throw ConfigInvalid("not a number: '" + s + "'");
        return v;
    };
    if (!values.empty()) {
        std::stringstream ss(values);
        for (std::string item; std::getline(ss, item, ',');) out.push_back(number(item));
    } else if (!range.empty()) {
        std::stringstream ss(range);
        std::vector<double> parts;
        for (std::string item; std::getline(ss, item, ':');) parts.push_back(number(item));
        if (parts.size() != 3 || parts[2] <= 0) throw ConfigInvalid("--range expects START:STOP:STEP with STEP > 0");
        const long count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
        for (long i = 0; i <= count; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    }
    if (out.empty()) throw ConfigInvalid("sweep needs --values or --range");
    return out;
}

int cmd_sweep(const GlobalOptions& g, const std::string& param, const std::string& values, const std::string& range,
              const std::string& mode) {
    const ExperimentConfig cfg = load_config(g);
    const auto rows = sweep(cfg, param, parse_values(values, range), parse_sweep_mode(mode), g.threads);
    const std::string hash = config_hash(cfg.source);
    if (g.format == "csv") {
        std::ostringstream os;
        write_sweep_csv(os, hash, param, rows);
        emit(g, "sweep.csv", os.str());
    } else {
        emit(g, "sweep.json", sweep_json(hash, param, rows).dump(2) + '\n');
    }
    return kExitOk;
}

int cmd_compare(const GlobalOptions& g) {
    ExperimentConfig cfg = load_config(g);
    cfg.architectures = {Architecture::adaptive, Architecture::actuator_fixed, Architecture::sensor_fixed};
    cfg.source = normalised(cfg, cfg.source);
    const auto runs = run_experiment(cfg, g.threads);
    const auto stats = aggregate(cfg, runs);
    std::size_t wins = 0;
    for (std::size_t r = 0; r < cfg.runs; ++r) {
        const RunSummary& a = runs[3 * r];
        const RunSummary& b = runs[3 * r + 1];
        if (!a.diverged && (b.diverged || a.J < b.J)) ++wins;
    }
    const double win_rate = cfg.runs ? double(wins) / double(cfg.runs) : 0.0;
    if (g.format == "csv") {
        std::ostringstream os;
        os << hash_comment(cfg) << "architecture,runs,diverged,mean_J,stddev_J\n";
        for (const auto& s : stats)
            os << csv_line({std::string(to_string(s.architecture)), std::to_string(s.runs), std::to_string(s.diverged),
                            format_double(s.mean_J), format_double(s.stddev_J)});
        os << "# adaptive_beats_actuator_fixed=" << format_double(win_rate) << '\n';
        emit(g, "compare.csv", os.str());
    } else {
        json j = summary_json(cfg, runs, false);
        j["adaptive_beats_actuator_fixed"] = win_rate;
        emit(g, "compare.json", j.dump(2) + '\n');
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive controller placement over multi-hop wireless networks"};
    app.require_subcommand(1);
    GlobalOptions g;
    std::uint64_t seed = 0;
    std::size_t runs = 0, steps = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
    auto* runs_opt = app.add_option("--runs", runs, "Number of Monte-Carlo runs");
    auto* steps_opt = app.add_option("--steps", steps, "Horizon in steps");
    app.add_option("--config", g.config_path, "Experiment config (JSON)");
    app.add_option("--out", g.out_dir, "Output directory (default: stdout)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", g.threads, "Worker threads for Monte-Carlo campaigns")->check(CLI::PositiveNumber);
    app.fallthrough();

    auto* design = app.add_subcommand("design", "Compute LQR and Kalman gains");
    bool traces = false;
    auto* simulate = app.add_subcommand("simulate", "Run the configured Monte-Carlo campaign");
    simulate->add_flag("--traces", traces, "Write per-step CSV traces");
    bool empirical = false;
    auto* location = app.add_subcommand("analyze-location", "Controller-location distribution");
    location->add_flag("--empirical", empirical, "Also report simulated frequencies");
    std::string cov_method = "fixed_point";
    bool sampling = false;
    auto* cov = app.add_subcommand("stationary-cov", "Stationary covariance of the closed loop");
    cov->add_option("--method", cov_method, "fixed_point or linear_solve");
    cov->add_flag("--sampling", sampling, "Estimate the mean matrices by sampling");
    std::string mss_method = "spectral";
    auto* mss = app.add_subcommand("mss", "Mean-square stability check");
    mss->add_option("--method", mss_method, "spectral or iterate");
    std::string param, values, range, mode = "stationary";
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter");
    sweep_cmd->add_option("--param", param, "p, q, r or horizon")->required();
    sweep_cmd->add_option("--values", values, "Comma-separated values");
    sweep_cmd->add_option("--range", range, "START:STOP:STEP");
    sweep_cmd->add_option("--mode", mode, "stationary, montecarlo or both");
    auto* compare = app.add_subcommand("compare", "Compare the three architectures on common random numbers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    if (*seed_opt) g.seed = seed;
    if (*runs_opt) g.runs = runs;
    if (*steps_opt) g.steps = steps;

    try {
        if (*design) return cmd_design(g);
        if (*simulate) return cmd_simulate(g, traces);
        if (*location) return cmd_analyze_location(g, empirical);
        if (*cov) return cmd_stationary_cov(g, cov_method, sampling);
        if (*mss) return cmd_mss(g, mss_method);
        if (*sweep_cmd) return cmd_sweep(g, param, values, range, mode);
        if (*compare) return cmd_compare(g);
    } catch (const ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
