#pragma once

// Closed-loop Markov jump-linear model Θ_{k+1} = 𝒜(β_k)Θ_k + ℬ(β_k)n_k over the
// stacked state Θ = col(x, x̂^(1..M), ν^(1..M)) and noise n_k = col(w_k, v_{k+1}).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wsan/linalg.hpp"
#include "wsan/network.hpp"
#include "wsan/plant.hpp"
#include "wsan/protocol.hpp"
#include "wsan/roles.hpp"

namespace wsan {

/// Partition of Θ for given (n, m, M).
struct StackedLayout {
    Index n = 0;
    Index m = 0;
    int M = 0;

    Index dim() const { return n + M * n + M * m; }
    Index xhat_offset(int i) const { return n + (i - 1) * n; }
    Index nu_offset(int i) const { return n + M * n + (i - 1) * m; }
};

class StackedState {
  public:
    StackedState(StackedLayout layout, Vector theta) : layout_(layout), theta_(std::move(theta)) {
        detail::require_dims(theta_.size() == layout_.dim(), "StackedState: wrong dimension");
    }

    static StackedState zero(StackedLayout layout) { return StackedState(layout, Vector::Zero(layout.dim())); }

    /// Stack x, node estimates and backup values.
    static StackedState pack(StackedLayout layout, const Vector& x, const std::vector<Vector>& xhats,
                             const std::vector<Vector>& nus) {
        Vector theta(layout.dim());
        theta.head(layout.n) = x;
        for (int i = 1; i <= layout.M; ++i) {
            theta.segment(layout.xhat_offset(i), layout.n) = xhats.at(static_cast<std::size_t>(i - 1));
            theta.segment(layout.nu_offset(i), layout.m) = nus.at(static_cast<std::size_t>(i - 1));
        }
        return StackedState(layout, std::move(theta));
    }

    const StackedLayout& layout() const { return layout_; }
    const Vector& theta() const { return theta_; }
    Vector x() const { return theta_.head(layout_.n); }
    Vector xhat(int i) const { return theta_.segment(layout_.xhat_offset(i), layout_.n); }
    Vector xhat_all() const { return theta_.segment(layout_.n, layout_.M * layout_.n); }
    Vector nu(int i) const { return theta_.segment(layout_.nu_offset(i), layout_.m); }

  private:
    StackedLayout layout_;
    Vector theta_;
};

/// Γ^(i) = ∏_{j<i} γ^(j) for the forward bits of `word`.
inline bool measurement_reaches(const OutcomeWord& word, int i) {
    for (int j = 1; j < i; ++j)
        if (!word.gamma(j)) return false;
    return true;
}

/// b^(i) = e_ℓ ⊗ L with ℓ = c^(i−1) when an input was relayed into node i, ℓ = i otherwise.
/// `word` is β_k; the result is the selector b_{k+1}^(i).
inline Matrix build_selector_b(int i, const OutcomeWord& word, const GainPair& gains) {
    const int M = word.M();
    if (i < 1 || i > M) throw OutOfRange("build_selector_b: node index out of range");
    int ell = i;
    if (i >= 2) {
        const RoleAssignment roles = derive_roles(word);
        const int c_up = roles.c_partial[static_cast<std::size_t>(i - 1)];
        if (c_up > 0 && word.gamma(i - 1)) ell = c_up;
    }
    return kron(unit_row(M, ell), gains.L);
}

/// Input coupling d^(i) of node i's estimator for word β_k.
inline Matrix build_d(int i, const OutcomeWord& word, const PlantModel& plant, const GainPair& gains) {
    const int M = word.M();
    if (i < 1 || i > M) throw OutOfRange("build_d: node index out of range");
    const Index n = plant.n();
    const double gate = measurement_reaches(word, i) ? 1.0 : 0.0;
    const double fb = word.delta(i) ? 1.0 : 0.0;
    const Matrix I = Matrix::Identity(n, n);
    const Matrix KC = gate * gains.K * plant.C();
    return (1.0 - fb) * (I - KC) * kron(unit_row(M, i), plant.B()) +
           ((1.0 - fb) * KC + fb * I) * kron(unit_row(M, M), plant.B());
}

struct ModeMatrices {
    Matrix A;  // 𝒜(β)
    Matrix B;  // ℬ(β)
    Matrix D;  // 𝒟(β), estimator rows
    Matrix E;  // ℰ(β)
    Matrix F;  // ℱ(β), backup-value rows
    Matrix G;  // 𝒢(β)
};

inline ModeMatrices build_mode(const OutcomeWord& word, const PlantModel& plant, const GainPair& gains) {
    const int M = word.M();
    const StackedLayout lay{plant.n(), plant.m(), M};
    const Index n = lay.n, m = lay.m, p = plant.p(), d = lay.dim();
    const Matrix& A = plant.A();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix KCA = gains.K * plant.C() * A;

    ModeMatrices mm;
    mm.D = Matrix::Zero(M * n, d);
    mm.E = Matrix::Zero(M * n, n + p);
    for (int i = 1; i <= M; ++i) {
        const double gate = measurement_reaches(word, i) ? 1.0 : 0.0;
        const Index row = (i - 1) * n;
        mm.D.block(row, 0, n, n) = gate * KCA;
        mm.D.block(row, lay.xhat_offset(i), n, n) = (I - gate * gains.K * plant.C()) * A;
        mm.D.block(row, lay.nu_offset(1), n, M * m) = build_d(i, word, plant, gains);
        mm.E.block(row, 0, n, n) = gate * gains.K * plant.C();
        mm.E.block(row, n, n, p) = gate * gains.K;
    }
    mm.F = Matrix::Zero(M * m, d);
    mm.G = Matrix::Zero(M * m, n + p);
    for (int i = 1; i <= M; ++i) {
        const Matrix b = build_selector_b(i, word, gains);
        mm.F.middleRows((i - 1) * m, m) = b * mm.D;
        mm.G.middleRows((i - 1) * m, m) = b * mm.E;
    }
    mm.A = Matrix::Zero(d, d);
    mm.A.block(0, 0, n, n) = A;
    mm.A.block(0, lay.nu_offset(M), n, m) = plant.B();
    mm.A.middleRows(n, M * n) = mm.D;
    mm.A.middleRows(n + M * n, M * m) = mm.F;
    mm.B = Matrix::Zero(d, n + p);
    mm.B.block(0, 0, n, n) = I;
    mm.B.middleRows(n, M * n) = mm.E;
    mm.B.middleRows(n + M * n, M * m) = mm.G;
    return mm;
}

/// Mode matrices for one (plant, gains, M), built on demand and memoised by β.
/// Safe for concurrent use.
class JumpLinearModel {
  public:
    JumpLinearModel(PlantModel plant, GainPair gains, int M)
        : plant_(std::move(plant)), gains_(std::move(gains)), M_(M) {
        check_node_count(M_);
        gains_.check_against(plant_);
    }

    const PlantModel& plant() const { return plant_; }
    const GainPair& gains() const { return gains_; }
    int M() const { return M_; }
    StackedLayout layout() const { return StackedLayout{plant_.n(), plant_.m(), M_}; }
    std::uint64_t mode_count() const { return outcome_space_size(M_); }

    std::shared_ptr<const ModeMatrices> mode(std::uint64_t beta) const {
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(beta); it != cache_.end()) return it->second;
        }
        auto built = std::make_shared<const ModeMatrices>(build_mode(decode_beta(beta, M_), plant_, gains_));
        std::lock_guard lock(mutex_);
        return cache_.emplace(beta, std::move(built)).first->second;
    }

    /// Builds without touching the memo table (for streaming over large outcome spaces).
    ModeMatrices build(std::uint64_t beta) const { return build_mode(decode_beta(beta, M_), plant_, gains_); }

  private:
    PlantModel plant_;
    GainPair gains_;
    int M_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::uint64_t, std::shared_ptr<const ModeMatrices>> cache_;
};

/// Θ_{k+1} = 𝒜(β_k)Θ_k + ℬ(β_k)·col(w_k, v_{k+1}).
inline StackedState model_step(const JumpLinearModel& model, const StackedState& theta, const OutcomeWord& word,
                               const Vector& w, const Vector& v_next) {
    detail::require_dims(word.M() == model.M(), "model_step: word has the wrong node count");
    const auto mm = model.mode(word.beta());
    Vector noise(w.size() + v_next.size());
    noise << w, v_next;
    return StackedState(theta.layout(), mm->A * theta.theta() + mm->B * noise);
}

struct EquivalenceReport {
    double max_deviation = 0.0;
    long worst_step = -1;
};

/// Runs the protocol simulator and the jump-linear model in lockstep on the same
/// outcomes and noise and reports the largest relative deviation of Θ. Needs
/// horizon+1 outcomes, w_0..w_{horizon−1} and v_0..v_horizon.
inline EquivalenceReport equivalence_trace(const PlantModel& plant, const GainPair& gains, int M,
                                           const std::vector<StepOutcome>& outcomes, const std::vector<Vector>& w,
                                           const std::vector<Vector>& v, std::size_t horizon, const Vector& x0) {
    detail::require_dims(outcomes.size() >= horizon + 1 && w.size() >= horizon && v.size() >= horizon + 1,
                         "equivalence_trace: not enough outcomes or noise samples");
    const JumpLinearModel model(plant, gains, M);
    const StackedLayout lay = model.layout();
    ProtocolWorld world = make_protocol_world(plant, gains, M, x0);

    const Vector w0 = Vector::Zero(plant.n());
    StepRecord rec = simulate_step(world, outcomes[0], horizon > 0 ? w[0] : w0, v[0], plant, gains);

    // ν₀ from the cold-start word (δ_{−1} = 1, γ_0), applied to the model's own x̂₀.
    Bits ones(static_cast<std::size_t>(M - 1), 1);
    const OutcomeWord start(outcomes[0].gamma, ones);
    std::vector<Vector> nu0;
    Vector xhat_stack(M * plant.n());
    for (int i = 1; i <= M; ++i) xhat_stack.segment((i - 1) * plant.n(), plant.n()) = rec.xhats[static_cast<std::size_t>(i - 1)];
    for (int i = 1; i <= M; ++i) nu0.push_back(build_selector_b(i, start, gains) * xhat_stack);
    StackedState theta = StackedState::pack(lay, rec.x, rec.xhats, nu0);

    auto deviation = [](const Vector& ref, const Vector& got) {
        return (ref - got).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff());
    };
    EquivalenceReport report;
    report.max_deviation = deviation(StackedState::pack(lay, rec.x, rec.xhats, rec.backups).theta(), theta.theta());
    report.worst_step = 0;
    for (std::size_t k = 0; k < horizon; ++k) {
        const OutcomeWord word = word_between(outcomes[k], outcomes[k + 1]);
        theta = model_step(model, theta, word, w[k], v[k + 1]);
        rec = simulate_step(world, outcomes[k + 1], k + 1 < w.size() ? w[k + 1] : w0, v[k + 1], plant, gains);
        const double dev = deviation(StackedState::pack(lay, rec.x, rec.xhats, rec.backups).theta(), theta.theta());
        if (dev > report.max_deviation) {
            report.max_deviation = dev;
            report.worst_step = static_cast<long>(k + 1);
        }
    }
    return report;
}

}  // namespace wsan
