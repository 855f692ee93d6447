#pragma once

// Controller-location distributions, the outcome-enumeration oracle, stationary
// covariance of the jump-linear closed loop, and mean-square stability checks.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wsan/errors.hpp"
#include "wsan/jump_model.hpp"
#include "wsan/linalg.hpp"
#include "wsan/network.hpp"
#include "wsan/rng.hpp"
#include "wsan/roles.hpp"

namespace wsan {

/// Per-node probabilities, entry i−1 for node i.
struct LocationDistribution {
    std::vector<double> mu_prob;   // Pr{μ^(i) = 1}
    std::vector<double> inC_prob;  // Pr{i ∈ 𝒞}
    std::vector<double> c_prob;    // Pr{c = i}
};

/// Pr{μ^(i) = 1} for i = 1..M in closed form (q_M = 1):
/// q_i + Σ_{j=1}^{i−1} p^j q_{i−j} ∏_{ℓ=0}^{j−1} (1 − q_{i−ℓ}).
inline std::vector<double> mu_probability(const IidNetworkModel& model) {
    const int M = model.M();
    const double p = model.p();
    std::vector<double> out(static_cast<std::size_t>(M));
    for (int i = 1; i <= M; ++i) {
        double total = model.q(i);
        for (int j = 1; j <= i - 1; ++j) {
            double prod = 1.0;
            for (int ell = 0; ell <= j - 1; ++ell) prod *= 1.0 - model.q(i - ell);
            total += std::pow(p, j) * model.q(i - j) * prod;
        }
        out[static_cast<std::size_t>(i - 1)] = total;
    }
    return out;
}

/// Same quantity from the recursion Pr{μ^(i)=1} = q_i + p(1 − q_i)Pr{μ^(i−1)=1}.
inline std::vector<double> mu_probability_recursive(const IidNetworkModel& model) {
    std::vector<double> out(static_cast<std::size_t>(model.M()));
    double prev = 0.0;
    for (int i = 1; i <= model.M(); ++i) {
        const double q = model.q(i);
        prev = q + model.p() * (1.0 - q) * prev;
        out[static_cast<std::size_t>(i - 1)] = prev;
    }
    return out;
}

/// Closed-form location distribution for i.i.d. links.
inline LocationDistribution location_distribution(const IidNetworkModel& model) {
    const int M = model.M();
    const double p = model.p();
    LocationDistribution d;
    d.mu_prob = mu_probability(model);
    d.inC_prob.resize(static_cast<std::size_t>(M));
    d.c_prob.resize(static_cast<std::size_t>(M));
    for (int i = 1; i <= M; ++i) {
        const double mu_up = i == 1 ? 0.0 : d.mu_prob[static_cast<std::size_t>(i - 2)];
        const double inC = model.q(i) * (1.0 - p * mu_up);
        d.inC_prob[static_cast<std::size_t>(i - 1)] = inC;
        d.c_prob[static_cast<std::size_t>(i - 1)] = std::pow(p, M - i) * inC;
    }
    return d;
}

inline constexpr int kMaxEnumerationNodes = 12;

/// Exact distribution by enumerating every outcome word and running the role
/// derivation on it. Works for arbitrary per-link marginals.
inline LocationDistribution brute_force_distribution(int M, const LinkMarginals& marg) {
    check_node_count(M);
    if (M > kMaxEnumerationNodes)
        throw TooLarge("brute_force_distribution: M=" + std::to_string(M) + " exceeds enumeration cap of 12");
    LocationDistribution d;
    d.mu_prob.assign(static_cast<std::size_t>(M), 0.0);
    d.inC_prob.assign(static_cast<std::size_t>(M), 0.0);
    d.c_prob.assign(static_cast<std::size_t>(M), 0.0);
    const std::uint64_t size = outcome_space_size(M);
    for (std::uint64_t beta = 0; beta < size; ++beta) {
        // The word's δ bits play the role of δ_{k−1}, its γ bits γ_k.
        const OutcomeWord word = decode_beta(beta, M);
        const double prob = word_probability(word, marg);
        if (prob == 0.0) continue;
        const RoleAssignment roles = derive_roles(word);
        for (int i = 1; i <= M; ++i) {
            if (roles.mu[static_cast<std::size_t>(i)]) d.mu_prob[static_cast<std::size_t>(i - 1)] += prob;
            if (roles.in_controller_set(i)) d.inC_prob[static_cast<std::size_t>(i - 1)] += prob;
        }
        d.c_prob[static_cast<std::size_t>(roles.controller - 1)] += prob;
    }
    return d;
}

inline LocationDistribution brute_force_distribution(const IidNetworkModel& model) {
    return brute_force_distribution(model.M(), marginals(model));
}

// ---------------------------------------------------------------------------
// Conditional mean matrices 𝒜̄_j = E{𝒜(β) | Ξ = j}, ℬ̄_j likewise.

struct ConditionalMeans {
    Matrix A;
    Matrix B;
    // Entrywise standard errors; only filled in sampling mode.
    std::optional<Matrix> A_stderr;
    std::optional<Matrix> B_stderr;
};

struct MeanOptions {
    enum class Mode { exact, sampling };
    Mode mode = Mode::exact;
    std::uint64_t max_exact_modes = std::uint64_t{1} << 18;  // M ≤ 10
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 1;
};

inline std::vector<ConditionalMeans> conditional_mean_matrices(const JumpLinearModel& model,
                                                               const MarkovNetworkModel& net,
                                                               const MeanOptions& opts = {}) {
    detail::require_dims(model.M() == net.M(), "conditional_mean_matrices: node counts differ");
    const StackedLayout lay = model.layout();
    const Index d = lay.dim();
    const Index nw = model.plant().n() + model.plant().p();
    const std::size_t S = net.state_count();
    std::vector<ConditionalMeans> out;

    if (opts.mode == MeanOptions::Mode::exact) {
        const std::uint64_t size = model.mode_count();
        if (size > opts.max_exact_modes)
            throw BudgetExceeded("conditional_mean_matrices: " + std::to_string(size) +
                                 " modes exceed the exact-enumeration budget");
        std::vector<CompensatedSum> sumA(S, CompensatedSum(d, d)), sumB(S, CompensatedSum(d, nw));
        std::vector<double> weights(S);
        for (std::uint64_t beta = 0; beta < size; ++beta) {
            const OutcomeWord word = decode_beta(beta, model.M());
            bool any = false;
            for (std::size_t j = 0; j < S; ++j) {
                weights[j] = net.word_probability(word, j);
                any = any || weights[j] != 0.0;
            }
            if (!any) continue;
            const ModeMatrices mm = build_mode(word, model.plant(), model.gains());
            for (std::size_t j = 0; j < S; ++j) {
                if (weights[j] == 0.0) continue;
                sumA[j].add(weights[j] * mm.A);
                sumB[j].add(weights[j] * mm.B);
            }
        }
        for (std::size_t j = 0; j < S; ++j) out.push_back(ConditionalMeans{sumA[j].value(), sumB[j].value(), {}, {}});
        return out;
    }

    if (opts.samples < 2) throw Error("conditional_mean_matrices: sampling needs at least two samples");
    const Rng root(opts.seed);
    for (std::size_t j = 0; j < S; ++j) {
        Rng rng = root.split(j);
        Matrix sA = Matrix::Zero(d, d), sA2 = Matrix::Zero(d, d);
        Matrix sB = Matrix::Zero(d, nw), sB2 = Matrix::Zero(d, nw);
        for (std::uint64_t t = 0; t < opts.samples; ++t) {
            const OutcomeWord word = sample_word(net.marginals(j), rng);
            const auto mm = model.mode(word.beta());
            sA += mm->A;
            sA2 += mm->A.cwiseProduct(mm->A);
            sB += mm->B;
            sB2 += mm->B.cwiseProduct(mm->B);
        }
        const double N = static_cast<double>(opts.samples);
        auto stderr_of = [N](const Matrix& s, const Matrix& s2) {
            Matrix var = (s2 - s.cwiseProduct(s) / N) / (N - 1.0);
            return Matrix(var.cwiseMax(0.0).cwiseSqrt() / std::sqrt(N));
        };
        out.push_back(ConditionalMeans{sA / N, sB / N, stderr_of(sA, sA2), stderr_of(sB, sB2)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stationary covariance: H_i = Σ_j p_ji 𝒜̄_i H_j 𝒜̄_iᵀ + π_i ℬ̄_i W ℬ̄_iᵀ.

struct StationaryResult {
    std::vector<Matrix> H;            // per network state
    Matrix total;                     // Σ_i H_i = lim E{ΘΘᵀ}
    Matrix plant_cov;                 // top-left n×n block of total
    double trace_plant = 0.0;
    std::vector<double> residuals;    // Frobenius residual of each state's equation
    long iterations = 0;              // fixed point only
};

enum class CovarianceMethod { fixed_point, linear_solve };

struct CovarianceOptions {
    double tolerance = 1e-13;
    long max_iterations = 1'000'000;
    Index max_linear_unknowns = 4096;
};

/// W = diag(Q, R).
inline Matrix noise_covariance(const PlantModel& plant) {
    const Index n = plant.n(), p = plant.p();
    Matrix W = Matrix::Zero(n + p, n + p);
    W.topLeftCorner(n, n) = plant.Q();
    W.bottomRightCorner(p, p) = plant.R();
    return W;
}

/// One application of the covariance recursion to the per-state iterates `H`.
inline std::vector<Matrix> stationary_iteration_step(const std::vector<ConditionalMeans>& means,
                                                     const MarkovNetworkModel& net, const Matrix& W,
                                                     const std::vector<Matrix>& H) {
    const std::size_t S = net.state_count();
    const Matrix& P = net.transition();
    std::vector<Matrix> next(S);
    for (std::size_t i = 0; i < S; ++i) {
        Matrix mix = Matrix::Zero(H[0].rows(), H[0].cols());
        for (std::size_t j = 0; j < S; ++j) {
            const double pji = P(static_cast<Index>(j), static_cast<Index>(i));
            if (pji != 0.0) mix += pji * H[j];
        }
        const Matrix& Ai = means[i].A;
        const Matrix& Bi = means[i].B;
        Matrix h = Ai * mix * Ai.transpose() + net.stationary()(static_cast<Index>(i)) * (Bi * W * Bi.transpose());
        next[i] = 0.5 * (h + h.transpose());
    }
    return next;
}

namespace detail {
inline void finish_stationary(StationaryResult& res, const std::vector<ConditionalMeans>& means,
                              const MarkovNetworkModel& net, const Matrix& W, Index n) {
    res.total = Matrix::Zero(res.H[0].rows(), res.H[0].cols());
    for (const auto& h : res.H) res.total += h;
    res.plant_cov = res.total.topLeftCorner(n, n);
    res.trace_plant = res.plant_cov.trace();
    const auto applied = stationary_iteration_step(means, net, W, res.H);
    res.residuals.clear();
    for (std::size_t i = 0; i < res.H.size(); ++i) res.residuals.push_back(frobenius(applied[i] - res.H[i]));
}
}  // namespace detail

/// Solves the covariance equations for arbitrary per-state mean matrices. `n` is the
/// plant order (size of the leading block reported as plant_cov).
inline StationaryResult stationary_covariance(const std::vector<ConditionalMeans>& means, const MarkovNetworkModel& net,
                                              const Matrix& W, Index n, CovarianceMethod method,
                                              const CovarianceOptions& opts = {}) {
    const std::size_t S = net.state_count();
    detail::require_dims(means.size() == S, "stationary_covariance: one mean pair per state required");
    const Index d = means[0].A.rows();
    StationaryResult res;

    if (method == CovarianceMethod::fixed_point) {
        std::vector<Matrix> H(S, Matrix::Zero(d, d));
        for (long it = 1; it <= opts.max_iterations; ++it) {
            auto next = stationary_iteration_step(means, net, W, H);
            double step = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < S; ++i) {
                step += (next[i] - H[i]).squaredNorm();
                scale += next[i].squaredNorm();
            }
            H = std::move(next);
            if (!std::isfinite(scale)) throw NotConverged("stationary_covariance: iterates became non-finite");
            if (std::sqrt(step) <= opts.tolerance * (1.0 + std::sqrt(scale))) {
                res.iterations = it;
                res.H = std::move(H);
                detail::finish_stationary(res, means, net, W, n);
                return res;
            }
        }
        throw NotConverged("stationary_covariance: fixed point did not converge within " +
                           std::to_string(opts.max_iterations) + " iterations");
    }

    const Index block = d * d;
    const Index unknowns = static_cast<Index>(S) * block;
    if (unknowns > opts.max_linear_unknowns)
        throw BudgetExceeded("stationary_covariance: linear system with " + std::to_string(unknowns) +
                             " unknowns exceeds budget");
    Matrix sys = Matrix::Identity(unknowns, unknowns);
    Vector rhs(unknowns);
    const Matrix& P = net.transition();
    for (std::size_t i = 0; i < S; ++i) {
        const Matrix AA = kron(means[i].A, means[i].A);
        for (std::size_t j = 0; j < S; ++j) {
            const double pji = P(static_cast<Index>(j), static_cast<Index>(i));
            if (pji != 0.0) sys.block(static_cast<Index>(i) * block, static_cast<Index>(j) * block, block, block) -= pji * AA;
        }
        const Matrix forcing = net.stationary()(static_cast<Index>(i)) * (means[i].B * W * means[i].B.transpose());
        rhs.segment(static_cast<Index>(i) * block, block) = vec(forcing);
    }
    const Vector sol = solve_dense(sys, rhs);
    for (std::size_t i = 0; i < S; ++i) {
        Matrix h = unvec(sol.segment(static_cast<Index>(i) * block, block), d, d);
        res.H.push_back(0.5 * (h + h.transpose()));
    }
    detail::finish_stationary(res, means, net, W, n);
    return res;
}

inline StationaryResult stationary_covariance(const JumpLinearModel& model, const MarkovNetworkModel& net,
                                              const std::vector<ConditionalMeans>& means, CovarianceMethod method,
                                              const CovarianceOptions& opts = {}) {
    return stationary_covariance(means, net, noise_covariance(model.plant()), model.plant().n(), method, opts);
}

inline StationaryResult stationary_covariance(const JumpLinearModel& model, const MarkovNetworkModel& net,
                                              CovarianceMethod method = CovarianceMethod::fixed_point,
                                              const CovarianceOptions& opts = {}, const MeanOptions& mean_opts = {}) {
    return stationary_covariance(model, net, conditional_mean_matrices(model, net, mean_opts), method, opts);
}

// ---------------------------------------------------------------------------
// Mean-square stability.

enum class MssMethod { spectral, iterate };

struct MssVerdict {
    bool stable = false;
    MssMethod method = MssMethod::spectral;
    double spectral_radius = std::numeric_limits<double>::quiet_NaN();  // spectral only
    long iterations = 0;                                                 // iterate only
    double growth = std::numeric_limits<double>::quiet_NaN();            // iterate only: final/initial trace
    std::string certificate;
};

struct MssOptions {
    int max_spectral_nodes = 4;
    Index max_operator_dim = 2500;
    double eigen_tolerance = 1e-10;
    double ratio_threshold = 1.0 - 1e-6;
    long sustain = 100;
    double divergence_growth = 1e6;
    double converged_tolerance = 1e-13;
    long max_iterations = 2'000'000;
};

/// Second-moment operator of the closed loop: block (i, j) = p_ji Σ_β φ(β|i) 𝒜(β) ⊗ 𝒜(β).
inline Matrix second_moment_operator(const JumpLinearModel& model, const MarkovNetworkModel& net) {
    const Index d = model.layout().dim();
    const Index block = d * d;
    const std::size_t S = net.state_count();
    std::vector<Matrix> per_state(S, Matrix::Zero(block, block));
    for (std::uint64_t beta = 0; beta < model.mode_count(); ++beta) {
        const OutcomeWord word = decode_beta(beta, model.M());
        std::optional<Matrix> AA;
        for (std::size_t i = 0; i < S; ++i) {
            const double phi = net.word_probability(word, i);
            if (phi == 0.0) continue;
            if (!AA) {
                const auto mm = model.mode(beta);
                AA = kron(mm->A, mm->A);
            }
            per_state[i] += phi * *AA;
        }
    }
    Matrix op = Matrix::Zero(static_cast<Index>(S) * block, static_cast<Index>(S) * block);
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) {
            const double pji = net.transition()(static_cast<Index>(j), static_cast<Index>(i));
            if (pji != 0.0) op.block(static_cast<Index>(i) * block, static_cast<Index>(j) * block, block, block) = pji * per_state[i];
        }
    return op;
}

inline MssVerdict mss_check(const JumpLinearModel& model, const MarkovNetworkModel& net, MssMethod method,
                            const MssOptions& opts = {}) {
    MssVerdict v;
    v.method = method;
    if (method == MssMethod::spectral) {
        const Index d = model.layout().dim();
        const Index dim = static_cast<Index>(net.state_count()) * d * d;
        if (model.M() > opts.max_spectral_nodes || dim > opts.max_operator_dim)
            throw BudgetExceeded("mss_check: spectral test needs M ≤ " + std::to_string(opts.max_spectral_nodes) +
                                 " and operator dimension ≤ " + std::to_string(opts.max_operator_dim));
        v.spectral_radius = spectral_radius(second_moment_operator(model, net));
        v.stable = v.spectral_radius < 1.0 - opts.eigen_tolerance;
        v.certificate = "spectral radius of second-moment operator = " + std::to_string(v.spectral_radius);
        return v;
    }

    const auto means = conditional_mean_matrices(model, net);
    const Matrix W = noise_covariance(model.plant());
    const Index d = model.layout().dim();
    std::vector<Matrix> H(net.state_count(), Matrix::Zero(d, d));
    auto total_trace = [](const std::vector<Matrix>& hs) {
        double t = 0.0;
        for (const auto& h : hs) t += h.trace();
        return t;
    };
    double initial = 0.0;
    double prev_step = std::numeric_limits<double>::infinity();
    long sustained = 0;
    for (long it = 1; it <= opts.max_iterations; ++it) {
        auto next = stationary_iteration_step(means, net, W, H);
        double step = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < H.size(); ++i) {
            step += (next[i] - H[i]).squaredNorm();
            scale += next[i].squaredNorm();
        }
        step = std::sqrt(step);
        scale = std::sqrt(scale);
        H = std::move(next);
        const double tr = total_trace(H);
        if (it == 1) initial = tr;
        v.iterations = it;
        v.growth = initial > 0.0 ? tr / initial : std::numeric_limits<double>::infinity();
        if (!std::isfinite(tr) || v.growth > opts.divergence_growth) {
            v.stable = false;
            v.certificate = "trace grew by factor " + std::to_string(v.growth) + " after " + std::to_string(it) + " iterations";
            return v;
        }
        if (step <= opts.converged_tolerance * (1.0 + scale)) {
            v.stable = true;
            v.certificate = "iteration converged after " + std::to_string(it) + " iterations";
            return v;
        }
        if (it > 1 && prev_step > 0.0 && step / prev_step < opts.ratio_threshold) {
            if (++sustained >= opts.sustain && step <= 1e-9 * (1.0 + scale)) {
                v.stable = true;
                v.certificate = "geometric contraction sustained over " + std::to_string(sustained) + " iterations";
                return v;
            }
        } else {
            sustained = 0;
        }
        prev_step = step;
    }
    v.stable = false;
    v.certificate = "inconclusive: neither convergence nor divergence within iteration cap";
    return v;
}

}  // namespace wsan
