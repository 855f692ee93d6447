#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "wsan/network.hpp"

using namespace wsan;
using Catch::Approx;

TEST_CASE("outcome words round-trip for every beta", "[network][property]") {
    for (int M = 2; M <= 5; ++M) {
        const std::uint64_t size = outcome_space_size(M);
        REQUIRE(size == (std::uint64_t{1} << (2 * M - 2)));
        for (std::uint64_t beta = 0; beta < size; ++beta) {
            const OutcomeWord w = decode_beta(beta, M);
            REQUIRE(w.beta() == beta);
            REQUIRE(encode_beta(w.gamma(), w.delta()) == beta);
            REQUIRE(OutcomeWord(w.gamma(), w.delta()) == w);
        }
    }
}

TEST_CASE("bit layout puts feedback bits low", "[network]") {
    // M = 3: δ1 → bit 0, δ2 → bit 1, γ1 → bit 2, γ2 → bit 3
    REQUIRE(encode_beta({0, 0}, {1, 0}) == 1);
    REQUIRE(encode_beta({0, 0}, {0, 1}) == 2);
    REQUIRE(encode_beta({1, 0}, {0, 0}) == 4);
    REQUIRE(encode_beta({0, 1}, {0, 0}) == 8);
    const OutcomeWord w = decode_beta(9, 3);
    CHECK(w.delta(1));
    CHECK_FALSE(w.delta(2));
    CHECK(w.delta(3));
    CHECK(w.gamma(0));
    CHECK_FALSE(w.gamma(1));
    CHECK(w.gamma(2));
}

TEST_CASE("decode rejects out-of-range words", "[network]") {
    REQUIRE_THROWS_AS(decode_beta(16, 3), OutOfRange);
    REQUIRE_THROWS_AS(outcome_space_size(1), Error);
    REQUIRE_THROWS_AS(outcome_space_size(kMaxNodes + 1), Error);
}

TEST_CASE("word probabilities sum to one", "[network][property]") {
    Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const int M = 2 + trial % 4;
        std::vector<double> q;
        for (int i = 1; i < M; ++i) q.push_back(rng.uniform());
        const IidNetworkModel net(M, rng.uniform(), q);
        double total = 0.0;
        for (std::uint64_t b = 0; b < outcome_space_size(M); ++b) total += word_probability(decode_beta(b, M), net);
        REQUIRE(total == Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("iid model validation", "[network]") {
    REQUIRE_THROWS_AS(IidNetworkModel(3, 1.2, 0.5), InvalidModel);
    REQUIRE_THROWS_AS(IidNetworkModel(3, 0.5, std::vector<double>{0.5}), DimensionMismatch);
    const IidNetworkModel net(3, 0.5, std::vector<double>{0.2, 0.4});
    CHECK(net.q(3) == 1.0);
    CHECK(net.q(2) == 0.4);
}

TEST_CASE("markov model validation and stationary law", "[network]") {
    Matrix P(2, 2);
    P << 0.9, 0.1, 0.3, 0.7;
    const MarkovNetworkModel net(2, P, {{{0.5}, {0.5}}, {{0.9}, {0.9}}});
    REQUIRE(net.stationary()(0) == Approx(0.75).epsilon(1e-14));
    REQUIRE(net.stationary()(1) == Approx(0.25).epsilon(1e-14));

    Matrix bad(2, 2);
    bad << 0.9, 0.2, 0.3, 0.7;
    REQUIRE_THROWS_AS(MarkovNetworkModel(2, bad, {{{0.5}, {0.5}}, {{0.5}, {0.5}}}), InvalidModel);
    Matrix periodic(2, 2);
    periodic << 0.0, 1.0, 1.0, 0.0;
    REQUIRE_THROWS_AS(MarkovNetworkModel(2, periodic, {{{0.5}, {0.5}}, {{0.5}, {0.5}}}), InvalidModel);
    Matrix reducible(2, 2);
    reducible << 1.0, 0.0, 0.5, 0.5;
    REQUIRE_THROWS_AS(MarkovNetworkModel(2, reducible, {{{0.5}, {0.5}}, {{0.5}, {0.5}}}), InvalidModel);
}

TEST_CASE("obstacle network layout", "[network]") {
    const auto net = obstacle_network(0.95);
    REQUIRE(net.state_count() == 4);
    REQUIRE(net.M() == 10);
    const auto& s2 = net.marginals(1);
    for (int i = 1; i <= 9; ++i) {
        const bool fwd = i >= 3 && i <= 5;
        const bool fb = i == 4 || i == 5;
        CHECK(s2.gamma[std::size_t(i - 1)] == (fwd ? 0.6 : 0.95));
        CHECK(s2.delta[std::size_t(i - 1)] == (fb ? 0.6 : 0.95));
    }
    REQUIRE_THROWS_AS(obstacle_network(0.5), OutOfRange);
}

TEST_CASE("single-state markov equals iid in distribution", "[network][property]") {
    // Chi-squared comparison of word frequencies from the two samplers.
    const IidNetworkModel iid(3, 0.7, std::vector<double>{0.6, 0.8});
    const NetworkModel a = iid;
    const NetworkModel b = MarkovNetworkModel::from_iid(iid);
    const std::size_t N = 40000;
    Rng ra(1), rb(2);
    auto sa = generate_outcomes(a, N, ra);
    auto sb = generate_outcomes(b, N, rb);
    std::vector<double> ca(16, 0.0), cb(16, 0.0);
    for (std::size_t k = 0; k < N; ++k) {
        ca[encode_beta(sa[k].gamma, sa[k].delta)] += 1;
        cb[encode_beta(sb[k].gamma, sb[k].delta)] += 1;
    }
    double chi2 = 0.0;
    for (std::uint64_t beta = 0; beta < 16; ++beta) {
        const double e = N * word_probability(decode_beta(beta, 3), iid);
        chi2 += (ca[beta] - e) * (ca[beta] - e) / e + (cb[beta] - e) * (cb[beta] - e) / e;
    }
    // 30 degrees of freedom; 99.9% quantile ≈ 59.7
    REQUIRE(chi2 < 59.7);
}

TEST_CASE("markov stream follows the chain", "[network]") {
    Matrix P(2, 2);
    P << 0.95, 0.05, 0.1, 0.9;
    const NetworkModel net = MarkovNetworkModel(2, P, {{{1.0}, {1.0}}, {{0.0}, {0.0}}});
    Rng rng(4);
    const auto outs = generate_outcomes(net, 60000, rng);
    double in0 = 0;
    std::size_t stay = 0, from0 = 0;
    for (std::size_t k = 0; k < outs.size(); ++k) {
        const int s = outs[k].state;
        if (s == 0) ++in0;
        // state 0 links always succeed, state 1 links always fail; δ_k follows Ξ_{k+1}
        if (k + 1 < outs.size()) {
            REQUIRE(outs[k].delta[0] == (outs[k + 1].state == 0 ? 1 : 0));
            REQUIRE(outs[k].gamma[0] == (s == 0 ? 1 : 0));
            if (s == 0) {
                ++from0;
                if (outs[k + 1].state == 0) ++stay;
            }
        }
    }
    REQUIRE(in0 / outs.size() == Approx(2.0 / 3.0).margin(0.03));
    REQUIRE(double(stay) / double(from0) == Approx(0.95).margin(0.01));
}

TEST_CASE("outcome generation is seed deterministic", "[network]") {
    const NetworkModel net = obstacle_network(0.97);
    Rng a(7), b(7);
    const auto x = generate_outcomes(net, 500, a);
    const auto y = generate_outcomes(net, 500, b);
    for (std::size_t k = 0; k < x.size(); ++k) {
        REQUIRE(x[k].gamma == y[k].gamma);
        REQUIRE(x[k].delta == y[k].delta);
        REQUIRE(x[k].state == y[k].state);
    }
}
