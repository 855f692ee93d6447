#pragma once

// Dense linear-algebra kernel shared by every module. Thin layer over Eigen so the
// rest of the library only ever sees wsan::Matrix / wsan::Vector.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "wsan/errors.hpp"

namespace wsan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Kronecker product a ⊗ b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// ℓ-th unit row vector of length `size` (1-based ℓ, as in e_ℓ).
inline Matrix unit_row(Index size, Index ell) {
    Matrix e = Matrix::Zero(1, size);
    e(0, ell - 1) = 1.0;
    return e;
}

inline double frobenius(const Matrix& a) { return a.norm(); }

inline double spectral_radius(const Matrix& a) {
    detail::require_dims(a.rows() == a.cols(), "spectral_radius: matrix must be square");
    if (a.rows() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw Error("spectral_radius: eigenvalue solver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& a, double tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + a.cwiseAbs().maxCoeff());
}

/// Symmetric positive-definiteness via Cholesky success.
inline bool is_spd(const Matrix& a) {
    if (!is_symmetric(a)) return false;
    Eigen::LLT<Matrix> llt(a);
    return llt.info() == Eigen::Success;
}

/// Positive semi-definiteness up to a relative eigenvalue tolerance.
inline bool is_psd(const Matrix& a, double tol = 1e-9) {
    if (!is_symmetric(a, tol)) return false;
    Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
    return es.eigenvalues().minCoeff() >= -tol * scale;
}

/// Column-stacking vectorisation.
inline Vector vec(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

inline Matrix unvec(const Vector& v, Index rows, Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// Dense LU solve; throws SingularSystem when the factorisation is rank deficient.
inline Vector solve_dense(const Matrix& a, const Vector& b) {
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw SingularSystem("solve_dense: singular system");
    return lu.solve(b);
}

/// Neumaier-compensated accumulator for long matrix sums.
class CompensatedSum {
  public:
    CompensatedSum(Index rows, Index cols)
        : sum_(Matrix::Zero(rows, cols)), comp_(Matrix::Zero(rows, cols)) {}

    void add(const Matrix& term) {
        for (Index j = 0; j < sum_.cols(); ++j) {
            for (Index i = 0; i < sum_.rows(); ++i) {
                const double s = sum_(i, j);
                const double x = term(i, j);
                const double t = s + x;
                if (std::abs(s) >= std::abs(x))
                    comp_(i, j) += (s - t) + x;
                else
                    comp_(i, j) += (x - t) + s;
                sum_(i, j) = t;
            }
        }
    }

    void add(const CompensatedSum& other) {
        add(other.sum_);
        add(other.comp_);
    }

    Matrix value() const { return sum_ + comp_; }

  private:
    Matrix sum_;
    Matrix comp_;
};

}  // namespace wsan
