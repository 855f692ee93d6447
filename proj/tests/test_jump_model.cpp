#include <catch2/catch_amalgamated.hpp>

#include "wsan/jump_model.hpp"

using namespace wsan;

namespace {

struct Fixture {
    PlantModel plant = integrator_plant();
    GainPair gains = design_gains(plant, default_stage_cost(2, 1));
};

void noise_for(const PlantModel& plant, std::size_t H, Rng& rng, std::vector<Vector>& w, std::vector<Vector>& v) {
    for (std::size_t k = 0; k <= H; ++k) {
        w.push_back(rng.gaussian(Vector::Zero(plant.n()), plant.Q()));
        v.push_back(rng.gaussian(Vector::Zero(plant.p()), plant.R()));
    }
}

}  // namespace

TEST_CASE("layout offsets", "[jump]") {
    const StackedLayout lay{2, 1, 4};
    REQUIRE(lay.dim() == 2 + 8 + 4);
    REQUIRE(lay.xhat_offset(1) == 2);
    REQUIRE(lay.xhat_offset(4) == 8);
    REQUIRE(lay.nu_offset(1) == 10);
    REQUIRE(lay.nu_offset(4) == 13);
}

TEST_CASE("plant rows of every mode", "[jump]") {
    Fixture f;
    const int M = 3;
    for (std::uint64_t beta = 0; beta < outcome_space_size(M); ++beta) {
        const ModeMatrices mm = build_mode(decode_beta(beta, M), f.plant, f.gains);
        const StackedLayout lay{2, 1, M};
        REQUIRE(mm.A.rows() == lay.dim());
        REQUIRE((mm.A.block(0, 0, 2, 2) - f.plant.A()).norm() == 0.0);
        REQUIRE((mm.A.block(0, lay.nu_offset(M), 2, 1) - f.plant.B()).norm() == 0.0);
        REQUIRE(mm.A.block(0, 2, 2, lay.dim() - 3).cwiseAbs().sum() == 0.0);
        REQUIRE((mm.A.middleRows(lay.nu_offset(1), M) - mm.F).norm() == 0.0);
    }
}

TEST_CASE("selector points at the relayed origin", "[jump]") {
    Fixture f;
    // perfect feedback and forward links: every node relays node 1's input
    const OutcomeWord all(Bits{1, 1, 1}, Bits{1, 1, 1});
    for (int i = 1; i <= 4; ++i) REQUIRE((build_selector_b(i, all, f.gains) - kron(unit_row(4, 1), f.gains.L)).norm() == 0.0);
    // forward link 2 broken: node 3 uses its own estimate, node 4 relays node 3
    const OutcomeWord cut(Bits{1, 0, 1}, Bits{1, 1, 1});
    REQUIRE((build_selector_b(2, cut, f.gains) - kron(unit_row(4, 1), f.gains.L)).norm() == 0.0);
    REQUIRE((build_selector_b(3, cut, f.gains) - kron(unit_row(4, 3), f.gains.L)).norm() == 0.0);
    REQUIRE((build_selector_b(4, cut, f.gains) - kron(unit_row(4, 3), f.gains.L)).norm() == 0.0);
    REQUIRE_THROWS_AS(build_selector_b(5, cut, f.gains), OutOfRange);
}

TEST_CASE("jump model reproduces the protocol on random networks", "[jump][property]") {
    Fixture f;
    Rng rng(2718);
    for (int trial = 0; trial < 12; ++trial) {
        const int M = 2 + trial % 6;
        std::vector<double> q;
        for (int i = 1; i < M; ++i) q.push_back(0.2 + 0.8 * rng.uniform());
        const NetworkModel net = IidNetworkModel(M, 0.4 + 0.6 * rng.uniform(), q);
        Rng nr = rng.split(std::uint64_t(trial));
        const std::size_t H = 300;
        const auto outs = generate_outcomes(net, H + 1, nr);
        std::vector<Vector> w, v;
        noise_for(f.plant, H, nr, w, v);
        const auto rep = equivalence_trace(f.plant, f.gains, M, outs, w, v, H, Vector::Constant(2, 10.0));
        REQUIRE(rep.max_deviation < 1e-9);
    }
}

TEST_CASE("jump model reproduces the protocol on the obstacle network", "[jump]") {
    Fixture f;
    const NetworkModel net = obstacle_network(0.9);
    Rng nr(31);
    const std::size_t H = 400;
    const auto outs = generate_outcomes(net, H + 1, nr);
    std::vector<Vector> w, v;
    noise_for(f.plant, H, nr, w, v);
    const auto rep = equivalence_trace(f.plant, f.gains, 10, outs, w, v, H, Vector::Constant(2, 10.0));
    REQUIRE(rep.max_deviation < 1e-9);
}

TEST_CASE("mode cache returns identical matrices", "[jump]") {
    Fixture f;
    const JumpLinearModel model(f.plant, f.gains, 3);
    REQUIRE(model.mode_count() == 16);
    const auto a = model.mode(7);
    const auto b = model.mode(7);
    REQUIRE(a.get() == b.get());
    REQUIRE((model.build(7).A - a->A).norm() == 0.0);
}

TEST_CASE("stacked state pack and unpack", "[jump]") {
    const StackedLayout lay{2, 1, 3};
    std::vector<Vector> xh{Vector::Constant(2, 1.0), Vector::Constant(2, 2.0), Vector::Constant(2, 3.0)};
    std::vector<Vector> nu{Vector::Constant(1, 4.0), Vector::Constant(1, 5.0), Vector::Constant(1, 6.0)};
    const StackedState s = StackedState::pack(lay, Vector::Constant(2, -1.0), xh, nu);
    REQUIRE(s.x()(1) == -1.0);
    REQUIRE(s.xhat(2)(0) == 2.0);
    REQUIRE(s.nu(3)(0) == 6.0);
    REQUIRE_THROWS_AS(StackedState(lay, Vector::Zero(3)), DimensionMismatch);
}
