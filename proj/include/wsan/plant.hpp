#pragma once

// Plant model, nominal controller/estimator gains and their offline design.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "wsan/errors.hpp"
#include "wsan/linalg.hpp"

namespace wsan {

/// Discrete-time LTI plant x⁺ = Ax + Bu + w, y = Cx + v with w ~ N(0,Q), v ~ N(0,R)
/// and x₀ ~ N(x0_mean, P0).
class PlantModel {
  public:
    PlantModel(Matrix A, Matrix B, Matrix C, Matrix Q, Matrix R, Vector x0_mean, Matrix P0)
        : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), Q_(std::move(Q)),
          R_(std::move(R)), x0_mean_(std::move(x0_mean)), P0_(std::move(P0)) {
        validate();
    }

    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    const Matrix& C() const { return C_; }
    const Matrix& Q() const { return Q_; }
    const Matrix& R() const { return R_; }
    const Vector& x0_mean() const { return x0_mean_; }
    const Matrix& P0() const { return P0_; }

    Index n() const { return A_.rows(); }
    Index m() const { return B_.cols(); }
    Index p() const { return C_.rows(); }

  private:
    void validate() const {
        const Index n = A_.rows();
        if (n < 1 || A_.cols() != n) throw DimensionMismatch("PlantModel: A must be n×n, n ≥ 1");
        if (B_.rows() != n || B_.cols() < 1) throw DimensionMismatch("PlantModel: B must be n×m, m ≥ 1");
        if (C_.cols() != n || C_.rows() < 1) throw DimensionMismatch("PlantModel: C must be p×n, p ≥ 1");
        if (Q_.rows() != n || Q_.cols() != n) throw DimensionMismatch("PlantModel: Q must be n×n");
        if (R_.rows() != C_.rows() || R_.cols() != C_.rows())
            throw DimensionMismatch("PlantModel: R must be p×p");
        if (x0_mean_.size() != n) throw DimensionMismatch("PlantModel: x0_mean must have length n");
        if (P0_.rows() != n || P0_.cols() != n) throw DimensionMismatch("PlantModel: P0 must be n×n");
        if (!is_spd(Q_)) throw InvalidModel("PlantModel: Q must be symmetric positive definite");
        if (!is_spd(R_)) throw InvalidModel("PlantModel: R must be symmetric positive definite");
        if (!is_spd(P0_)) throw InvalidModel("PlantModel: P0 must be symmetric positive definite");
    }

    Matrix A_, B_, C_, Q_, R_;
    Vector x0_mean_;
    Matrix P0_;
};

/// State-feedback gain L (u = Lx̂, sign absorbed) and estimator gain K.
struct GainPair {
    Matrix L;
    Matrix K;

    void check_against(const PlantModel& plant) const {
        detail::require_dims(L.rows() == plant.m() && L.cols() == plant.n(), "GainPair: L must be m×n");
        detail::require_dims(K.rows() == plant.n() && K.cols() == plant.p(), "GainPair: K must be n×p");
    }
};

/// Quadratic stage cost xᵀQc x + uᵀRc u.
class StageCost {
  public:
    StageCost(Matrix Qc, Matrix Rc) : Qc_(std::move(Qc)), Rc_(std::move(Rc)) {
        if (!is_psd(Qc_, 1e-12)) throw InvalidModel("StageCost: Qc must be symmetric PSD");
        if (!is_spd(Rc_)) throw InvalidModel("StageCost: Rc must be symmetric positive definite");
    }
    const Matrix& Qc() const { return Qc_; }
    const Matrix& Rc() const { return Rc_; }

  private:
    Matrix Qc_, Rc_;
};

struct RiccatiOptions {
    double tolerance = 1e-12;
    long max_iterations = 1'000'000;
};

struct RiccatiSolution {
    Matrix P;         // Riccati solution (control cost-to-go or prediction covariance)
    Matrix gain;      // L for control, K for filtering
    long iterations = 0;
    double residual = 0.0;  // Frobenius norm of the Riccati equation residual at P
};

namespace detail {

// One DARE map P ↦ AᵀPA − AᵀPB(BᵀPB + R)⁻¹BᵀPA + Q.
inline Matrix dare_map(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                       const Matrix& P) {
    const Matrix BtP = B.transpose() * P;
    const Matrix S = BtP * B + R;
    const Matrix G = S.ldlt().solve(BtP * A);
    Matrix next = A.transpose() * P * A - (BtP * A).transpose() * G + Q;
    return 0.5 * (next + next.transpose());
}

inline Matrix iterate_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                           const RiccatiOptions& opts, long& iterations) {
    Matrix P = Q;
    for (long it = 1; it <= opts.max_iterations; ++it) {
        Matrix next = dare_map(A, B, Q, R, P);
        if (!next.allFinite()) throw RiccatiDivergence("Riccati iteration produced non-finite values");
        const double step = frobenius(next - P);
        P = std::move(next);
        if (step <= opts.tolerance * (1.0 + frobenius(P))) {
            iterations = it;
            return P;
        }
    }
    throw RiccatiDivergence("Riccati iteration did not converge within " +
                            std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace detail

/// Solves the control DARE for (A, B, Qc, Rc) by fixed-point iteration from P = Qc.
inline RiccatiSolution solve_control_riccati(const Matrix& A, const Matrix& B, const Matrix& Qc,
                                             const Matrix& Rc, const RiccatiOptions& opts = {}) {
    RiccatiSolution sol;
    sol.P = detail::iterate_dare(A, B, Qc, Rc, opts, sol.iterations);
    const Matrix BtP = B.transpose() * sol.P;
    sol.gain = -(BtP * B + Rc).ldlt().solve(BtP * A);
    sol.residual = frobenius(detail::dare_map(A, B, Qc, Rc, sol.P) - sol.P);
    return sol;
}

/// Solves the filtering DARE for (A, C, Q, R); `gain` is the innovation gain
/// K = ΣCᵀ(CΣCᵀ + R)⁻¹ where Σ is the steady prediction covariance.
inline RiccatiSolution solve_filter_riccati(const Matrix& A, const Matrix& C, const Matrix& Q,
                                            const Matrix& R, const RiccatiOptions& opts = {}) {
    RiccatiSolution sol;
    sol.P = detail::iterate_dare(A.transpose(), C.transpose(), Q, R, opts, sol.iterations);
    const Matrix S = C * sol.P * C.transpose() + R;
    sol.gain = S.ldlt().solve(C * sol.P).transpose();
    sol.residual = frobenius(detail::dare_map(A.transpose(), C.transpose(), Q, R, sol.P) - sol.P);
    return sol;
}

/// LQR gain with u = Lx. Throws NotStabilizable when A + BL is not Schur.
inline Matrix design_lqr(const PlantModel& plant, const StageCost& cost,
                         const RiccatiOptions& opts = {}) {
    detail::require_dims(cost.Qc().rows() == plant.n() && cost.Rc().rows() == plant.m(),
                         "design_lqr: stage cost dimensions do not match plant");
    auto sol = solve_control_riccati(plant.A(), plant.B(), cost.Qc(), cost.Rc(), opts);
    if (spectral_radius(plant.A() + plant.B() * sol.gain) >= 1.0)
        throw NotStabilizable("design_lqr: closed loop A + BL is not Schur stable");
    return sol.gain;
}

/// Steady-state estimator gain. Throws NotDetectable when (I − KC)A is not Schur.
inline Matrix design_kalman(const PlantModel& plant, const RiccatiOptions& opts = {}) {
    auto sol = solve_filter_riccati(plant.A(), plant.C(), plant.Q(), plant.R(), opts);
    const Matrix I = Matrix::Identity(plant.n(), plant.n());
    if (spectral_radius((I - sol.gain * plant.C()) * plant.A()) >= 1.0)
        throw NotDetectable("design_kalman: (I − KC)A is not Schur stable");
    return sol.gain;
}

inline GainPair design_gains(const PlantModel& plant, const StageCost& cost) {
    return GainPair{design_lqr(plant, cost), design_kalman(plant)};
}

/// Nominal observer update x̂ = Ax̂₋ + Bu₋ + K(y − C(Ax̂₋ + Bu₋)).
inline Vector nominal_step(const PlantModel& plant, const GainPair& gains, const Vector& xhat_prev,
                           const Vector& u_prev, const Vector& y) {
    detail::require_dims(xhat_prev.size() == plant.n() && u_prev.size() == plant.m() &&
                             y.size() == plant.p(),
                         "nominal_step: vector dimensions do not match plant");
    const Vector pred = plant.A() * xhat_prev + plant.B() * u_prev;
    return pred + gains.K * (y - plant.C() * pred);
}

// Named plants used by the experiments.

/// Open-loop unstable second-order plant (eigenvalues ≈ 1.054, 0.816), x̄₀ = [5, 5]ᵀ.
/// Q and R are the covariances used for estimator design; the experiments run it noiseless.
inline PlantModel unstable_plant() {
    Matrix A(2, 2), B(2, 1), C(1, 2);
    A << 1.87, -0.86, 1.0, 0.0;
    B << 1.0, 0.0;
    C << 0.048, 0.045;
    return PlantModel(A, B, C, 0.01 * Matrix::Identity(2, 2), 0.01 * Matrix::Identity(1, 1),
                      Vector::Constant(2, 5.0), 0.1 * Matrix::Identity(2, 2));
}

/// Plant with an integrator (eigenvalues 1, 0.8), Q = 0.01·I₂, R = 0.01, x̄₀ = [10, 10]ᵀ.
inline PlantModel integrator_plant() {
    Matrix A(2, 2), B(2, 1), C(1, 2);
    A << 1.8, -0.8, 1.0, 0.0;
    B << 1.0, 0.0;
    C << 0.048, 0.045;
    return PlantModel(A, B, C, 0.01 * Matrix::Identity(2, 2), 0.01 * Matrix::Identity(1, 1),
                      Vector::Constant(2, 10.0), 0.1 * Matrix::Identity(2, 2));
}

/// ‖x‖² + ‖u‖²/10 for a plant with n states and m inputs.
inline StageCost default_stage_cost(Index n, Index m) {
    return StageCost(Matrix::Identity(n, n), 0.1 * Matrix::Identity(m, m));
}

}  // namespace wsan
