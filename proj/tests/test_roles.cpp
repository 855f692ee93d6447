#include <catch2/catch_amalgamated.hpp>

#include "wsan/analysis.hpp"
#include "wsan/roles.hpp"

using namespace wsan;
using Catch::Approx;

namespace {

// Direct reading of the packet flow: walk the chain and track whether the packet
// carries an input and who computed it.
RoleAssignment walk(int M, const Bits& dprev, const Bits& g) {
    RoleAssignment r;
    r.M = M;
    r.mu.assign(std::size_t(M + 1), 0);
    r.c_partial.assign(std::size_t(M + 1), 0);
    int carried = 0;  // origin of the input in the packet arriving at node i, 0 if none
    for (int i = 1; i <= M; ++i) {
        const bool received = i == 1 || g[std::size_t(i - 2)];
        const bool fb = i == M || dprev[std::size_t(i - 1)];
        int in = received ? carried : 0;
        int out = in;
        if (in == 0 && fb) {
            out = i;
            r.controller_set.push_back(i);
        }
        r.mu[std::size_t(i)] = out != 0;
        r.c_partial[std::size_t(i)] = out;
        carried = out;
    }
    r.controller = carried;
    return r;
}

}  // namespace

TEST_CASE("role derivation matches packet walk for all words", "[roles][property]") {
    for (int M = 2; M <= 7; ++M)
        for (std::uint64_t beta = 0; beta < outcome_space_size(M); ++beta) {
            const OutcomeWord w = decode_beta(beta, M);
            const RoleAssignment a = derive_roles(w);
            const RoleAssignment b = walk(M, w.delta(), w.gamma());
            REQUIRE(a == b);
        }
}

TEST_CASE("roles invariants", "[roles][property]") {
    for (int M = 2; M <= 7; ++M)
        for (std::uint64_t beta = 0; beta < outcome_space_size(M); ++beta) {
            const RoleAssignment r = derive_roles(decode_beta(beta, M));
            REQUIRE(!r.controller_set.empty());
            REQUIRE(r.controller == r.controller_set.back());
            REQUIRE(r.mu[std::size_t(M)] == 1);
            REQUIRE(r.in_controller_set(M) == (r.controller == M));
            for (int i = 1; i <= M; ++i) REQUIRE((r.c_partial[std::size_t(i)] > 0) == (r.mu[std::size_t(i)] == 1));
        }
}

TEST_CASE("perfect links put the controller at node 1", "[roles]") {
    const RoleAssignment r = derive_roles(5, Bits(4, 1), Bits(4, 1));
    REQUIRE(r.controller == 1);
    REQUIRE(r.controller_set == std::vector<int>{1});
}

TEST_CASE("dead feedback puts the controller at the actuator", "[roles]") {
    const RoleAssignment r = derive_roles(5, Bits(4, 0), Bits(4, 1));
    REQUIRE(r.controller == 5);
}

TEST_CASE("dimension errors", "[roles]") {
    REQUIRE_THROWS_AS(derive_roles(3, Bits{1}, Bits{1, 1}), DimensionMismatch);
}

TEST_CASE("closed form location law matches enumeration", "[roles][analysis]") {
    Rng rng(23);
    for (int trial = 0; trial < 60; ++trial) {
        const int M = 2 + trial % 7;
        std::vector<double> q;
        for (int i = 1; i < M; ++i) q.push_back(rng.uniform());
        const IidNetworkModel net(M, rng.uniform(), q);
        const auto cf = location_distribution(net);
        const auto bf = brute_force_distribution(net);
        const auto rec = mu_probability_recursive(net);
        double mass = 0.0;
        for (int i = 0; i < M; ++i) {
            REQUIRE(cf.mu_prob[std::size_t(i)] == Approx(bf.mu_prob[std::size_t(i)]).margin(1e-13));
            REQUIRE(cf.mu_prob[std::size_t(i)] == Approx(rec[std::size_t(i)]).margin(1e-13));
            REQUIRE(cf.inC_prob[std::size_t(i)] == Approx(bf.inC_prob[std::size_t(i)]).margin(1e-13));
            REQUIRE(cf.c_prob[std::size_t(i)] == Approx(bf.c_prob[std::size_t(i)]).margin(1e-13));
            mass += cf.c_prob[std::size_t(i)];
        }
        REQUIRE(mass == Approx(1.0).margin(1e-13));
    }
}

TEST_CASE("three node location law by hand", "[roles][analysis]") {
    const double p = 0.7, q1 = 0.4, q2 = 0.9;
    const auto d = location_distribution(IidNetworkModel(3, p, std::vector<double>{q1, q2}));
    CHECK(d.c_prob[0] == Approx(q1 * p * p).margin(1e-15));
    CHECK(d.c_prob[1] == Approx(q1 * (1 - p) * q2 * p + (1 - q1) * q2 * p).margin(1e-15));
    CHECK(d.c_prob[2] == Approx(1 - q1 * p * p - q2 * p * (1 - q1 * p)).margin(1e-15));
}

TEST_CASE("enumeration cap", "[roles][analysis]") {
    REQUIRE_THROWS_AS(brute_force_distribution(IidNetworkModel(13, 0.5, 0.5)), TooLarge);
}
