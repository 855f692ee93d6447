#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "wsan/harness/config.hpp"
#include "wsan/harness/experiment.hpp"
#include "wsan/harness/io.hpp"
#include "wsan/harness/sweep.hpp"

using namespace wsan;
using namespace wsan::harness;

namespace {

json base_doc() {
    return json{{"plant", "integrator"},
                {"M", 3},
                {"network", {{"type", "iid"}, {"p", 0.9}, {"q", {0.8, 0.9}}}},
                {"horizon", 200},
                {"runs", 3},
                {"seed", 11},
                {"architectures", {"adaptive", "actuator_fixed", "sensor_fixed"}}};
}

}  // namespace

TEST_CASE("config defaults and normalisation", "[harness][config]") {
    const auto cfg = parse_config(json{{"plant", "integrator"}, {"M", 2}, {"network", {{"type", "iid"}, {"p", 1.0}, {"q", 1.0}}}});
    CHECK(cfg.horizon == 1000);
    CHECK(cfg.runs == 1);
    CHECK(cfg.noise);
    CHECK(cfg.architectures == std::vector<Architecture>{Architecture::adaptive});
    CHECK(cfg.source.at("schema_version") == kSchemaVersion);
    const auto uns = parse_config(json{{"plant", "unstable"}, {"M", 2}, {"network", {{"type", "iid"}, {"p", 1.0}, {"q", 1.0}}}});
    CHECK_FALSE(uns.noise);
}

TEST_CASE("config errors surface as ConfigInvalid", "[harness][config]") {
    auto expect_invalid = [](json doc) { REQUIRE_THROWS_AS(parse_config(doc), ConfigInvalid); };
    json d = base_doc();
    d["bogus"] = 1;
    expect_invalid(d);
    d = base_doc();
    d["plant"] = "pendulum";
    expect_invalid(d);
    d = base_doc();
    d["network"]["p"] = 1.5;
    expect_invalid(d);
    d = base_doc();
    d["network"]["q"] = {0.5};
    expect_invalid(d);
    d = base_doc();
    d["M"] = 1;
    expect_invalid(d);
    d = base_doc();
    d["schema_version"] = 2;
    expect_invalid(d);
    d = base_doc();
    d["architectures"] = {"somewhere"};
    expect_invalid(d);
    d = base_doc();
    d["network"] = {{"type", "obstacle"}, {"r", 0.5}};
    expect_invalid(d);
    d = base_doc();
    d["gains"] = {{"L", {{1.0, 2.0, 3.0}}}, {"K", {{1.0}, {1.0}}}};
    expect_invalid(d);
    REQUIRE_THROWS_AS(parse_config_text("{not json"), ConfigInvalid);
}

TEST_CASE("custom plant and explicit gains", "[harness][config]") {
    json d = base_doc();
    d["plant"] = {{"A", {{0.5}}}, {"B", {{1.0}}}, {"C", {{1.0}}}, {"Q", {{0.1}}}, {"R", {{0.1}}}};
    d["gains"] = {{"L", {{-0.2}}}, {"K", {{0.5}}}};
    const auto cfg = parse_config(d);
    CHECK(cfg.plant_name == "custom");
    CHECK(cfg.gains.L(0, 0) == -0.2);
    CHECK(cfg.plant_model().x0_mean().size() == 1);
}

TEST_CASE("markov network config", "[harness][config]") {
    json d = base_doc();
    d["M"] = 2;
    d["network"] = {{"type", "markov"}, {"P", {{0.9, 0.1}, {0.5, 0.5}}}, {"gamma", {{0.9}, {0.4}}}, {"delta", {{0.8}, {0.3}}}};
    const auto cfg = parse_config(d);
    REQUIRE(std::holds_alternative<MarkovNetworkModel>(cfg.network_model()));
    d["network"]["gamma"] = {{0.9}};
    REQUIRE_THROWS_AS(parse_config(d), ConfigInvalid);
}

TEST_CASE("config hash is stable and sensitive", "[harness][config]") {
    const auto a = parse_config(base_doc());
    const auto b = parse_config(base_doc());
    REQUIRE(config_hash(a.source) == config_hash(b.source));
    REQUIRE(config_hash(a.source).size() == 16);
    auto c = parse_config(base_doc());
    apply_overrides(c, 12, std::nullopt, std::nullopt);
    REQUIRE(c.seed == 12);
    REQUIRE(config_hash(c.source) != config_hash(a.source));
}

TEST_CASE("zero horizon gives zero cost", "[harness]") {
    json d = base_doc();
    d["horizon"] = 0;
    const auto cfg = parse_config(d);
    for (const auto& r : run_experiment(cfg)) {
        REQUIRE(r.J == 0.0);
        REQUIRE(r.steps == 0);
        REQUIRE_FALSE(r.diverged);
    }
}

TEST_CASE("experiments are reproducible and thread-count independent", "[harness]") {
    const auto cfg = parse_config(base_doc());
    const auto one = run_experiment(cfg, 1);
    const auto again = run_experiment(cfg, 1);
    const auto many = run_experiment(cfg, 3);
    REQUIRE(one.size() == 9);
    for (std::size_t i = 0; i < one.size(); ++i) {
        REQUIRE(one[i].J == again[i].J);
        REQUIRE(one[i].J == many[i].J);
        REQUIRE(one[i].run == i / 3);
        REQUIRE(one[i].architecture == cfg.architectures[i % 3]);
    }
}

TEST_CASE("architectures share the run's random inputs", "[harness]") {
    const auto cfg = parse_config(base_doc());
    std::vector<StepRecord> ta, tb;
    run_single(cfg, 1, Architecture::adaptive, &ta);
    run_single(cfg, 1, Architecture::actuator_fixed, &tb);
    // identical x0 and network draws
    REQUIRE(ta.front().gamma == tb.front().gamma);
    REQUIRE(ta.front().delta == tb.front().delta);
    Realization r1(cfg, 1), r2(cfg, 1), r3(cfg, 2);
    REQUIRE(r1.x0() == r2.x0());
    REQUIRE(r1.x0() != r3.x0());
}

TEST_CASE("J equals the sum over the recorded trace", "[harness]") {
    const auto cfg = parse_config(base_doc());
    std::vector<StepRecord> trace;
    const RunSummary r = run_single(cfg, 0, Architecture::adaptive, &trace);
    REQUIRE(trace.size() == cfg.horizon);
    REQUIRE(trace.front().k == 1);
    REQUIRE(trace.back().k == static_cast<long>(cfg.horizon));
    REQUIRE(performance_J(trace) == Catch::Approx(r.J).epsilon(1e-14));
    std::uint64_t total = 0;
    for (auto c : r.c_histogram) total += c;
    REQUIRE(total == cfg.horizon);
}

TEST_CASE("divergence stops the run", "[harness]") {
    json d{{"plant", "unstable"}, {"M", 2}, {"network", {{"type", "iid"}, {"p", 0.0}, {"q", 0.0}}},
           {"horizon", 5000}, {"architectures", {"actuator_fixed"}}};
    const auto cfg = parse_config(d);
    const RunSummary r = run_single(cfg, 0, Architecture::actuator_fixed);
    REQUIRE(r.diverged);
    REQUIRE(r.diverged_at > 0);
    REQUIRE(r.steps < cfg.horizon);
    const auto stats = aggregate(cfg, {r});
    REQUIRE(stats[0].diverged == 1);
    REQUIRE(std::isnan(stats[0].mean_J));
}

TEST_CASE("format_double round-trips", "[harness][io]") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, 20.0 * rng.uniform() - 10.0);
        REQUIRE(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    REQUIRE(format_double(0.5) == "0.5");
    REQUIRE(format_double(std::nan("")) == "nan");
}

TEST_CASE("trace csv has one row per step and a stamped header", "[harness][io]") {
    const auto cfg = parse_config(base_doc());
    std::vector<StepRecord> trace;
    const RunSummary r = run_single(cfg, 0, Architecture::adaptive, &trace);
    std::ostringstream os;
    const std::string hash = config_hash(cfg.source);
    write_trace_header(os, hash, 3, 2, 1, 1, false);
    write_trace_rows(os, r, trace, 3, false);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    REQUIRE(line.find(hash) != std::string::npos);
    std::getline(is, line);
    REQUIRE(line == "run,architecture,k,gamma1,gamma2,delta1,delta2,c,u1,y1,x1,x2,err1,err2,err3");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        REQUIRE(std::count(line.begin(), line.end(), ',') == 14);
    }
    REQUIRE(rows == cfg.horizon);
}

TEST_CASE("summary json carries hash and aggregates", "[harness][io]") {
    const auto cfg = parse_config(base_doc());
    const auto runs = run_experiment(cfg);
    const json j = summary_json(cfg, runs);
    REQUIRE(j.at("format") == kFormatVersion);
    REQUIRE(j.at("config_hash") == config_hash(cfg.source));
    REQUIRE(j.at("architectures").size() == 3);
    REQUIRE(j.at("runs").size() == 9);
}

TEST_CASE("sweep parameter substitution", "[harness][sweep]") {
    const auto cfg = parse_config(base_doc());
    const auto c = with_parameter(cfg, "q", 0.3);
    const auto& iid = std::get<IidNetworkModel>(c.network_model());
    REQUIRE(iid.q(1) == 0.3);
    REQUIRE(iid.q(2) == 0.3);
    REQUIRE(iid.p() == 0.9);
    REQUIRE(config_hash(c.source) != config_hash(cfg.source));
    REQUIRE_THROWS_AS(with_parameter(cfg, "r", 0.9), ConfigInvalid);
    REQUIRE_THROWS_AS(with_parameter(cfg, "p", 2.0), ConfigInvalid);
    REQUIRE_THROWS_AS(with_parameter(cfg, "zeta", 1.0), ConfigInvalid);
    REQUIRE_THROWS_AS(parse_sweep_mode("sideways"), ConfigInvalid);
}

TEST_CASE("stationary sweep rows are finite for stable settings", "[harness][sweep]") {
    json d = base_doc();
    d["M"] = 2;
    d["network"] = {{"type", "iid"}, {"p", 0.9}, {"q", 0.9}};
    const auto cfg = parse_config(d);
    const auto rows = sweep(cfg, "p", {0.8, 1.0}, SweepMode::stationary);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        REQUIRE(std::isfinite(r.trace_adaptive));
        REQUIRE(std::isfinite(r.trace_baseline));
    }
    REQUIRE(rows[1].trace_adaptive == Catch::Approx(rows[1].trace_baseline).epsilon(1e-8));
}
