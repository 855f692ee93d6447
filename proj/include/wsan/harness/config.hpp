#pragma once

// Experiment configuration: a versioned JSON document with named presets for the
// plants, the stage cost and the obstacle network.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsan/baselines.hpp"
#include "wsan/errors.hpp"
#include "wsan/linalg.hpp"
#include "wsan/network.hpp"
#include "wsan/plant.hpp"

namespace wsan::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kFormatVersion = "wsan-output/1";

struct ExperimentConfig {
    std::string plant_name;  // preset name or "custom"
    std::optional<PlantModel> plant;
    bool noise = true;
    GainPair gains;
    int M = 2;
    std::optional<NetworkModel> network;
    std::string network_name;  // "iid", "markov" or "obstacle"
    std::size_t horizon = 1000;
    std::size_t runs = 1;
    std::uint64_t seed = 1;
    std::vector<Architecture> architectures{Architecture::adaptive};
    bool write_traces = false;
    double divergence_threshold = 1e8;
    json source;  // normalised document the hash is computed from

    const PlantModel& plant_model() const { return *plant; }
    const NetworkModel& network_model() const { return *network; }
};

namespace detail {

inline Matrix to_matrix(const json& j, const char* what) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) throw ConfigInvalid(std::string(what) + ": expected a non-empty matrix");
    if (!j[0].is_array()) {  // row vector written flat is read as a column
        Matrix m(static_cast<Index>(j.size()), 1);
        for (std::size_t i = 0; i < j.size(); ++i) m(static_cast<Index>(i), 0) = j[i].get<double>();
        return m;
    }
    const std::size_t rows = j.size(), cols = j[0].size();
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw ConfigInvalid(std::string(what) + ": ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
    return m;
}

inline Vector to_vector(const json& j, const char* what) {
    const Matrix m = to_matrix(j, what);
    if (m.cols() != 1) throw ConfigInvalid(std::string(what) + ": expected a vector");
    return m.col(0);
}

inline std::vector<double> to_doubles(const json& j, std::size_t count, const char* what) {
    if (j.is_number()) return std::vector<double>(count, j.get<double>());
    if (!j.is_array() || j.size() != count)
        throw ConfigInvalid(std::string(what) + ": expected a number or an array of length " + std::to_string(count));
    return j.get<std::vector<double>>();
}

inline PlantModel parse_plant(const json& j, std::string& name) {
    if (j.is_string()) {
        name = j.get<std::string>();
        if (name == "unstable") return unstable_plant();
        if (name == "integrator") return integrator_plant();
        throw ConfigInvalid("unknown plant preset '" + name + "'");
    }
    name = "custom";
    const Index n = to_matrix(j.at("A"), "plant.A").rows();
    return PlantModel(to_matrix(j.at("A"), "plant.A"), to_matrix(j.at("B"), "plant.B"), to_matrix(j.at("C"), "plant.C"),
                      to_matrix(j.at("Q"), "plant.Q"), to_matrix(j.at("R"), "plant.R"),
                      j.contains("x0_mean") ? to_vector(j.at("x0_mean"), "plant.x0_mean") : Vector::Zero(n),
                      j.contains("P0") ? to_matrix(j.at("P0"), "plant.P0") : Matrix::Identity(n, n));
}

inline GainPair parse_gains(const json& j, const PlantModel& plant) {
    if (j.is_string()) {
        if (j.get<std::string>() != "design") throw ConfigInvalid("gains: expected \"design\" or an object");
        return design_gains(plant, default_stage_cost(plant.n(), plant.m()));
    }
    if (j.contains("design")) {
        const json& d = j.at("design");
        StageCost cost(to_matrix(d.at("Qc"), "gains.design.Qc"), to_matrix(d.at("Rc"), "gains.design.Rc"));
        return design_gains(plant, cost);
    }
    GainPair g{to_matrix(j.at("L"), "gains.L"), to_matrix(j.at("K"), "gains.K")};
    if (g.L.rows() != plant.m() && g.L.cols() == 1 && g.L.rows() == plant.n()) g.L.transposeInPlace();
    g.check_against(plant);
    return g;
}

inline NetworkModel parse_network(const json& j, int M, std::string& name) {
    name = j.at("type").get<std::string>();
    const std::size_t links = static_cast<std::size_t>(M - 1);
    if (name == "iid") {
        return IidNetworkModel(M, j.at("p").get<double>(), to_doubles(j.at("q"), links, "network.q"));
    }
    if (name == "obstacle") {
        return obstacle_network(j.at("r").get<double>(), M);
    }
    if (name == "markov") {
        const Matrix P = to_matrix(j.at("P"), "network.P");
        const json& g = j.at("gamma");
        const json& d = j.at("delta");
        if (!g.is_array() || !d.is_array() || g.size() != static_cast<std::size_t>(P.rows()) || d.size() != g.size())
            throw ConfigInvalid("network: gamma/delta tables need one row per state");
        std::vector<LinkMarginals> states;
        for (std::size_t s = 0; s < g.size(); ++s)
            states.push_back(LinkMarginals{to_doubles(g[s], links, "network.gamma"), to_doubles(d[s], links, "network.delta")});
        return MarkovNetworkModel(M, P, std::move(states));
    }
    throw ConfigInvalid("unknown network type '" + name + "'");
}

}  // namespace detail

/// 64-bit FNV-1a of the normalised config document, as 16 hex digits.
inline std::string config_hash(const json& doc) {
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

/// Canonical form with CLI overrides applied; hashed into every output.
inline json normalised(const ExperimentConfig& cfg, json doc) {
    doc["schema_version"] = kSchemaVersion;
    doc["horizon"] = cfg.horizon;
    doc["runs"] = cfg.runs;
    doc["seed"] = cfg.seed;
    doc["noise"] = cfg.noise;
    json arch = json::array();
    for (auto a : cfg.architectures) arch.push_back(std::string(to_string(a)));
    doc["architectures"] = arch;
    doc.erase("architecture");
    return doc;
}

/// Parses and validates a config document. Every failure (schema, dimensions,
/// infeasible gain design) surfaces as ConfigInvalid.
inline ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig cfg;
    try {
        if (!doc.is_object()) throw ConfigInvalid("config must be a JSON object");
        const int version = doc.value("schema_version", kSchemaVersion);
        if (version != kSchemaVersion) throw ConfigInvalid("unsupported schema_version " + std::to_string(version));
        static const std::vector<std::string> known{"schema_version", "plant", "noise", "gains", "M", "network", "horizon",
                                                    "runs", "seed", "architecture", "architectures", "outputs",
                                                    "divergence_threshold"};
        for (const auto& [key, _] : doc.items())
            if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigInvalid("unknown config key '" + key + "'");

        cfg.plant = detail::parse_plant(doc.at("plant"), cfg.plant_name);
        // The unstable preset is simulated without noise unless asked otherwise.
        cfg.noise = doc.value("noise", cfg.plant_name != "unstable");
        cfg.gains = detail::parse_gains(doc.value("gains", json("design")), *cfg.plant);
        cfg.M = doc.at("M").get<int>();
        check_node_count(cfg.M);
        cfg.network = detail::parse_network(doc.at("network"), cfg.M, cfg.network_name);
        cfg.horizon = doc.value("horizon", std::size_t{1000});
        cfg.runs = doc.value("runs", std::size_t{1});
        cfg.seed = doc.value("seed", std::uint64_t{1});
        cfg.divergence_threshold = doc.value("divergence_threshold", 1e8);
        if (doc.contains("architectures")) {
            cfg.architectures.clear();
            for (const auto& a : doc.at("architectures")) cfg.architectures.push_back(parse_architecture(a.get<std::string>()));
        } else if (doc.contains("architecture")) {
            cfg.architectures = {parse_architecture(doc.at("architecture").get<std::string>())};
        }
        if (cfg.architectures.empty()) throw ConfigInvalid("at least one architecture is required");
        if (doc.contains("outputs")) cfg.write_traces = doc.at("outputs").value("traces", false);
    } catch (const ConfigInvalid&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("config: ") + e.what());
    } catch (const Error& e) {
        throw ConfigInvalid(std::string("config: ") + e.what());
    }
    cfg.source = normalised(cfg, doc);
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

/// Re-derives the hash after run-control overrides (seed, runs, horizon).
inline void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<std::size_t> runs,
                            std::optional<std::size_t> steps) {
    if (seed) cfg.seed = *seed;
    if (runs) cfg.runs = *runs;
    if (steps) cfg.horizon = *steps;
    cfg.source = normalised(cfg, cfg.source);
}

}  // namespace wsan::harness
