#pragma once

// Transmission outcomes over the line network: the aggregated outcome word, the
// i.i.d. Bernoulli link model and the Markov-modulated network-state model.
//
// Link indices are 1-based throughout the public API (links 1..M−1). Forward link i
// carries s^(i) from node i to node i+1; feedback link i carries the actuator's
// broadcast to node i.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wsan/errors.hpp"
#include "wsan/linalg.hpp"
#include "wsan/rng.hpp"

namespace wsan {

using Bits = std::vector<std::uint8_t>;

/// Largest node count whose outcome word fits in 64 bits.
inline constexpr int kMaxNodes = 32;

inline void check_node_count(int M) {
    if (M < 2 || M > kMaxNodes) throw OutOfRange("node count M must lie in [2, 32], got " + std::to_string(M));
}

/// |𝕀| = 2^(2M−2).
inline std::uint64_t outcome_space_size(int M) {
    check_node_count(M);
    return std::uint64_t{1} << (2 * M - 2);
}

/// β = Σ_{i=1}^{M−1} (2^(M−1)·γ_i + δ_i)·2^(i−1): feedback bits occupy positions
/// 0..M−2 and forward bits positions M−1..2M−3.
inline std::uint64_t encode_beta(const Bits& gamma, const Bits& delta) {
    detail::require_dims(gamma.size() == delta.size() && !gamma.empty(),
                         "encode_beta: gamma and delta must both have length M−1");
    const std::size_t links = gamma.size();
    std::uint64_t beta = 0;
    for (std::size_t i = 0; i < links; ++i) {
        if (gamma[i]) beta |= std::uint64_t{1} << (links + i);
        if (delta[i]) beta |= std::uint64_t{1} << i;
    }
    return beta;
}

/// One outcome word: forward successes γ_{k+1}^(i) and feedback successes δ_k^(i).
/// The conventions γ^(0) = 1 and δ^(M) = 1 are implicit.
class OutcomeWord {
  public:
    OutcomeWord(Bits gamma, Bits delta)
        : M_(static_cast<int>(gamma.size()) + 1), gamma_(std::move(gamma)), delta_(std::move(delta)) {
        check_node_count(M_);
        beta_ = encode_beta(gamma_, delta_);
    }

    static OutcomeWord decode(std::uint64_t beta, int M) {
        if (beta >= outcome_space_size(M))
            throw OutOfRange("decode_beta: beta " + std::to_string(beta) + " outside outcome space for M=" +
                             std::to_string(M));
        const std::size_t links = static_cast<std::size_t>(M - 1);
        Bits gamma(links), delta(links);
        for (std::size_t i = 0; i < links; ++i) {
            delta[i] = static_cast<std::uint8_t>((beta >> i) & 1U);
            gamma[i] = static_cast<std::uint8_t>((beta >> (links + i)) & 1U);
        }
        return OutcomeWord(std::move(gamma), std::move(delta));
    }

    int M() const { return M_; }
    std::uint64_t beta() const { return beta_; }
    const Bits& gamma() const { return gamma_; }
    const Bits& delta() const { return delta_; }

    /// γ^(i) for i ∈ 0..M−1, with γ^(0) = 1.
    bool gamma(int i) const { return i == 0 ? true : gamma_.at(static_cast<std::size_t>(i - 1)) != 0; }
    /// δ^(i) for i ∈ 1..M, with δ^(M) = 1.
    bool delta(int i) const { return i == M_ ? true : delta_.at(static_cast<std::size_t>(i - 1)) != 0; }

    friend bool operator==(const OutcomeWord& a, const OutcomeWord& b) { return a.beta_ == b.beta_ && a.M_ == b.M_; }

  private:
    int M_;
    Bits gamma_;
    Bits delta_;
    std::uint64_t beta_ = 0;
};

inline OutcomeWord decode_beta(std::uint64_t beta, int M) { return OutcomeWord::decode(beta, M); }

namespace detail {
inline void require_probability(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidModel(std::string(what) + " must lie in [0, 1]");
}
}  // namespace detail

/// Independent Bernoulli links: forward success p on every link, feedback success q_i.
class IidNetworkModel {
  public:
    IidNetworkModel(int M, double p, std::vector<double> q) : M_(M), p_(p), q_(std::move(q)) {
        check_node_count(M_);
        detail::require_probability(p_, "forward success probability p");
        if (q_.size() != static_cast<std::size_t>(M_ - 1))
            throw DimensionMismatch("IidNetworkModel: q must have length M−1");
        for (double v : q_) detail::require_probability(v, "feedback success probability q_i");
    }

    IidNetworkModel(int M, double p, double q_all) : IidNetworkModel(M, p, std::vector<double>(static_cast<std::size_t>(M - 1), q_all)) {}

    int M() const { return M_; }
    double p() const { return p_; }
    const std::vector<double>& q() const { return q_; }
    /// q_i for i ∈ 1..M with q_M = 1.
    double q(int i) const { return i == M_ ? 1.0 : q_.at(static_cast<std::size_t>(i - 1)); }

  private:
    int M_;
    double p_;
    std::vector<double> q_;
};

/// Per-link success marginals for one network state.
struct LinkMarginals {
    std::vector<double> gamma;  // forward link i at index i−1
    std::vector<double> delta;  // feedback link i at index i−1
};

/// Product-Bernoulli probability of `word` under the given marginals.
inline double word_probability(const OutcomeWord& word, const LinkMarginals& marg) {
    double prob = 1.0;
    for (std::size_t i = 0; i < marg.gamma.size(); ++i) {
        prob *= word.gamma()[i] ? marg.gamma[i] : 1.0 - marg.gamma[i];
        prob *= word.delta()[i] ? marg.delta[i] : 1.0 - marg.delta[i];
    }
    return prob;
}

inline LinkMarginals marginals(const IidNetworkModel& model) {
    return LinkMarginals{std::vector<double>(static_cast<std::size_t>(model.M() - 1), model.p()), model.q()};
}

inline double word_probability(const OutcomeWord& word, const IidNetworkModel& model) {
    return word_probability(word, marginals(model));
}

/// Finite-state Markov network: state transitions P and per-state link marginals.
/// Link outcomes are conditionally independent given the state, so the word law
/// φ(β | j) is always evaluated as a product of marginals and never stored.
class MarkovNetworkModel {
  public:
    MarkovNetworkModel(int M, Matrix transition, std::vector<LinkMarginals> per_state,
                       std::vector<std::string> labels = {})
        : M_(M), P_(std::move(transition)), states_(std::move(per_state)), labels_(std::move(labels)) {
        check_node_count(M_);
        validate();
        pi_ = compute_stationary();
        if (labels_.empty())
            for (std::size_t j = 0; j < states_.size(); ++j) labels_.push_back(std::to_string(j + 1));
    }

    /// Single-state model with the marginals of an i.i.d. network.
    static MarkovNetworkModel from_iid(const IidNetworkModel& iid) {
        return MarkovNetworkModel(iid.M(), Matrix::Ones(1, 1), {wsan::marginals(iid)});
    }

    int M() const { return M_; }
    std::size_t state_count() const { return states_.size(); }
    const Matrix& transition() const { return P_; }
    const Vector& stationary() const { return pi_; }
    const LinkMarginals& marginals(std::size_t state) const { return states_.at(state); }
    const std::string& label(std::size_t state) const { return labels_.at(state); }

    /// φ(β | state).
    double word_probability(const OutcomeWord& word, std::size_t state) const {
        return wsan::word_probability(word, states_.at(state));
    }

  private:
    void validate() const {
        const Index S = P_.rows();
        if (S < 1 || P_.cols() != S) throw DimensionMismatch("MarkovNetworkModel: P must be square and non-empty");
        if (states_.size() != static_cast<std::size_t>(S))
            throw DimensionMismatch("MarkovNetworkModel: one marginal table per state is required");
        for (Index i = 0; i < S; ++i) {
            if ((P_.row(i).array() < 0.0).any()) throw InvalidModel("MarkovNetworkModel: negative transition probability");
            if (std::abs(P_.row(i).sum() - 1.0) > 1e-12) throw InvalidModel("MarkovNetworkModel: rows of P must sum to 1");
        }
        for (const auto& s : states_) {
            if (s.gamma.size() != static_cast<std::size_t>(M_ - 1) || s.delta.size() != static_cast<std::size_t>(M_ - 1))
                throw DimensionMismatch("MarkovNetworkModel: marginal tables must have M−1 entries");
            for (double v : s.gamma) detail::require_probability(v, "forward marginal");
            for (double v : s.delta) detail::require_probability(v, "feedback marginal");
        }
        // Primitive (irreducible and aperiodic) iff P^((S−1)²+1) is strictly positive.
        Matrix pattern = (P_.array() > 0.0).cast<double>().matrix();
        Matrix power = pattern;
        const Index steps = (S - 1) * (S - 1) + 1;
        for (Index t = 1; t < steps; ++t) power = ((power * pattern).array() > 0.0).cast<double>().matrix();
        if ((power.array() <= 0.0).any())
            throw InvalidModel("MarkovNetworkModel: chain must be irreducible and aperiodic");
    }

    Vector compute_stationary() const {
        const Index S = P_.rows();
        Matrix sys = P_.transpose() - Matrix::Identity(S, S);
        sys.row(S - 1).setOnes();
        Vector rhs = Vector::Zero(S);
        rhs(S - 1) = 1.0;
        Vector pi = solve_dense(sys, rhs);
        const double residual = (pi.transpose() * P_ - pi.transpose()).cwiseAbs().maxCoeff();
        if (residual > 1e-10 || std::abs(pi.sum() - 1.0) > 1e-10)
            throw InvalidModel("MarkovNetworkModel: stationary distribution residual too large");
        return pi;
    }

    int M_;
    Matrix P_;
    std::vector<LinkMarginals> states_;
    std::vector<std::string> labels_;
    Vector pi_;
};

using NetworkModel = std::variant<IidNetworkModel, MarkovNetworkModel>;

inline int node_count(const NetworkModel& net) {
    return std::visit([](const auto& m) { return m.M(); }, net);
}

inline MarkovNetworkModel as_markov(const NetworkModel& net) {
    if (const auto* iid = std::get_if<IidNetworkModel>(&net)) return MarkovNetworkModel::from_iid(*iid);
    return std::get<MarkovNetworkModel>(net);
}

inline OutcomeWord sample_word(const LinkMarginals& marg, Rng& rng) {
    const std::size_t links = marg.gamma.size();
    Bits gamma(links), delta(links);
    for (std::size_t i = 0; i < links; ++i) gamma[i] = rng.bernoulli(marg.gamma[i]);
    for (std::size_t i = 0; i < links; ++i) delta[i] = rng.bernoulli(marg.delta[i]);
    return OutcomeWord(std::move(gamma), std::move(delta));
}

inline OutcomeWord sample_iid(const IidNetworkModel& model, Rng& rng) { return sample_word(marginals(model), rng); }

/// Advances the network state and draws the next word with the new state's marginals.
/// With Ξ_k = current_state this yields (Ξ_{k+1}, β_k), where β_k = (γ_{k+1}, δ_k) is
/// conditioned on Ξ_{k+1}: the outcomes of step k+1 (forward links at k+1 and the
/// broadcast that precedes it) all see the radio environment of Ξ_{k+1}.
inline std::pair<std::size_t, OutcomeWord> sample_markov(const MarkovNetworkModel& model, std::size_t current_state,
                                                         Rng& rng) {
    if (current_state >= model.state_count()) throw OutOfRange("sample_markov: unknown network state");
    const std::size_t next = rng.categorical(model.transition().row(static_cast<Index>(current_state)).transpose());
    return {next, sample_word(model.marginals(next), rng)};
}

/// Moving-obstacle network on M nodes with four obstacle positions. In state j
/// (1-based) forward links {2j−1, 2j, 2j+1} and feedback links {2j, 2j+1} succeed
/// with probability 0.6; every other link succeeds with probability r.
inline MarkovNetworkModel obstacle_network(double r, int M = 10) {
    if (!(r >= 0.88 && r <= 1.0)) throw OutOfRange("obstacle_network: r must lie in [0.88, 1]");
    Matrix P(4, 4);
    P << 0.99, 0.01, 0.0, 0.0,
         0.003, 0.99, 0.007, 0.0,
         0.0, 0.003, 0.99, 0.007,
         0.007, 0.0, 0.003, 0.99;
    constexpr double blocked = 0.6;
    std::vector<LinkMarginals> states;
    for (int j = 1; j <= 4; ++j) {
        LinkMarginals lm;
        for (int i = 1; i <= M - 1; ++i) {
            const bool fwd_blocked = i == 2 * j - 1 || i == 2 * j || i == 2 * j + 1;
            const bool fb_blocked = i == 2 * j || i == 2 * j + 1;
            lm.gamma.push_back(fwd_blocked ? blocked : r);
            lm.delta.push_back(fb_blocked ? blocked : r);
        }
        states.push_back(std::move(lm));
    }
    return MarkovNetworkModel(M, P, std::move(states), {"1", "2", "3", "4"});
}

/// Outcomes consumed by one plant step k: forward bits γ_k, feedback bits δ_k for
/// the broadcast of u_k, and the network state Ξ_k (−1 for i.i.d. networks).
struct StepOutcome {
    Bits gamma;
    Bits delta;
    int state = -1;
};

/// The word β_k = (γ_{k+1}, δ_k) linking step k to step k+1.
inline OutcomeWord word_between(const StepOutcome& step_k, const StepOutcome& step_k1) {
    return OutcomeWord(step_k1.gamma, step_k.delta);
}

/// Sequential source of step outcomes. For Markov networks Ξ_0 is drawn from the
/// stationary distribution and γ_0 from Ξ_0's marginals.
class OutcomeStream {
  public:
    OutcomeStream(const NetworkModel& net, Rng rng) : net_(&net), rng_(std::move(rng)) {
        if (const auto* mk = std::get_if<MarkovNetworkModel>(net_)) {
            state_ = rng_.categorical(mk->stationary());
            gamma_ = sample_word(mk->marginals(state_), rng_).gamma();
        }
    }

    StepOutcome next() {
        if (const auto* iid = std::get_if<IidNetworkModel>(net_)) {
            OutcomeWord w = sample_iid(*iid, rng_);
            return StepOutcome{w.gamma(), w.delta(), -1};
        }
        const auto& mk = std::get<MarkovNetworkModel>(*net_);
        auto [next, word] = sample_markov(mk, state_, rng_);
        StepOutcome out{std::move(gamma_), word.delta(), static_cast<int>(state_)};
        gamma_ = word.gamma();
        state_ = next;
        return out;
    }

    const Rng& rng() const { return rng_; }

  private:
    const NetworkModel* net_;
    Rng rng_;
    std::size_t state_ = 0;
    Bits gamma_;
};

/// Draws outcomes for `steps` consecutive plant steps.
inline std::vector<StepOutcome> generate_outcomes(const NetworkModel& net, std::size_t steps, Rng& rng) {
    OutcomeStream stream(net, rng);
    std::vector<StepOutcome> out;
    out.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) out.push_back(stream.next());
    rng = stream.rng();
    return out;
}

}  // namespace wsan
