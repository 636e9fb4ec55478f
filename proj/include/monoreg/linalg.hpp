#pragma once

// Dense symmetric linear algebra templated on the scalar type. The double
// instantiation is the working precision; long double is used where a solve
// sits close to a singular matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "monoreg/errors.hpp"

namespace monoreg {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense n x n symmetric matrix. Construction mirrors the lower triangle, so
/// symmetry holds bit-for-bit in storage.
template <typename Scalar>
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  explicit SymmetricMatrix(const MatrixX<Scalar>& m) : m_(m) {
    if (m.rows() < 1 || m.rows() != m.cols())
      throw DataError("symmetric matrix must be square with n >= 1");
    for (Eigen::Index j = 0; j < m_.cols(); ++j)
      for (Eigen::Index i = j + 1; i < m_.rows(); ++i) m_(j, i) = m_(i, j);
  }

  /// Rejects inputs whose asymmetry exceeds rel_tol * max|m_ij| instead of mirroring silently.
  static SymmetricMatrix checked(const MatrixX<Scalar>& m, Scalar rel_tol) {
    if (m.rows() < 1 || m.rows() != m.cols())
      throw DataError("symmetric matrix must be square with n >= 1");
    const Scalar scale = m.cwiseAbs().maxCoeff();
    const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > rel_tol * scale)
      throw DataError("matrix is not symmetric (max asymmetry " + std::to_string(double(asym)) + ")");
    return SymmetricMatrix(m);
  }

  static SymmetricMatrix identity(Eigen::Index n) { return SymmetricMatrix(MatrixX<Scalar>::Identity(n, n)); }

  static SymmetricMatrix diagonal(const VectorX<Scalar>& d) {
    return SymmetricMatrix(MatrixX<Scalar>(d.asDiagonal()));
  }

  Eigen::Index size() const { return m_.rows(); }
  const MatrixX<Scalar>& matrix() const { return m_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  template <typename Other>
  SymmetricMatrix<Other> cast() const {
    return SymmetricMatrix<Other>(m_.template cast<Other>());
  }

  VectorX<Scalar> operator*(const VectorX<Scalar>& v) const { return m_ * v; }

  friend bool operator==(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  MatrixX<Scalar> m_;
};

/// max_i sum_j |m_ij|
template <typename Scalar>
Scalar norm_inf(const SymmetricMatrix<Scalar>& m) {
  return m.matrix().cwiseAbs().rowwise().sum().maxCoeff();
}

template <typename Scalar>
Scalar default_zero_threshold(const SymmetricMatrix<Scalar>& m) {
  return Scalar(1e-9) * norm_inf(m);
}

template <typename Scalar>
struct EigenDecomposition {
  VectorX<Scalar> eigenvalues;   // ascending
  MatrixX<Scalar> eigenvectors;  // column i pairs with eigenvalue i
  Scalar residual = 0;           // max_i |M v_i - lambda_i v_i|
  int sweeps = 0;

  Eigen::Index size() const { return eigenvalues.size(); }
  auto vector(Eigen::Index i) const { return eigenvectors.col(i); }
};

inline constexpr int kJacobiMaxSweeps = 100;

template <typename Scalar>
constexpr Scalar default_jacobi_tolerance() {
  return std::numeric_limits<Scalar>::epsilon() * Scalar(64);
}

template <typename Scalar>
Scalar eigen_residual(const SymmetricMatrix<Scalar>& m, const EigenDecomposition<Scalar>& ed) {
  Scalar worst = 0;
  for (Eigen::Index i = 0; i < ed.size(); ++i) {
    const VectorX<Scalar> r = m.matrix() * ed.vector(i) - ed.eigenvalues(i) * ed.vector(i);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

/// Cyclic Jacobi eigensolver. Sweeps until the largest off-diagonal magnitude
/// is at most tol * norm_inf(m); throws NumericalError after kJacobiMaxSweeps.
template <typename Scalar>
EigenDecomposition<Scalar> eigendecompose(const SymmetricMatrix<Scalar>& m,
                                          Scalar tol = default_jacobi_tolerance<Scalar>()) {
  using std::abs;
  using std::sqrt;
  if (!(tol > 0)) throw ArgumentError("eigendecompose: tol must be positive");

  const Eigen::Index n = m.size();
  MatrixX<Scalar> a = m.matrix();
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  const Scalar threshold = tol * norm_inf(m);

  auto max_off_diagonal = [&] {
    Scalar off = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j + 1; i < n; ++i) off = std::max(off, abs(a(i, j)));
    return off;
  };

  int sweep = 0;
  bool converged = max_off_diagonal() <= threshold;
  while (!converged && sweep < kJacobiMaxSweeps) {
    ++sweep;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        Scalar t;
        if (abs(theta) > Scalar(1e150)) {
          t = Scalar(1) / (Scalar(2) * theta);
        } else {
          t = Scalar(1) / (abs(theta) + sqrt(theta * theta + Scalar(1)));
          if (theta < 0) t = -t;
        }
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r != p && r != q) {
            const Scalar arp = a(r, p);
            const Scalar arq = a(r, q);
            a(r, p) = a(p, r) = c * arp - s * arq;
            a(r, q) = a(q, r) = s * arp + c * arq;
          }
          const Scalar vrp = v(r, p);
          const Scalar vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
    converged = max_off_diagonal() <= threshold;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  EigenDecomposition<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[k], order[k]);
    out.eigenvectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  out.residual = eigen_residual(m, out);

  if (!converged)
    throw NumericalError("Jacobi eigensolver did not converge within " + std::to_string(kJacobiMaxSweeps) +
                             " sweeps",
                         double(out.residual));
  return out;
}

/// Smallest eigenvalue strictly above zero_threshold.
template <typename Scalar>
Scalar least_positive_eigenvalue(const EigenDecomposition<Scalar>& ed, Scalar zero_threshold) {
  for (Eigen::Index i = 0; i < ed.size(); ++i)
    if (ed.eigenvalues(i) > zero_threshold) return ed.eigenvalues(i);
  throw DataError("no positive spectrum: every eigenvalue is <= the zero threshold");
}

template <typename Scalar>
Scalar least_positive_eigenvalue(const SymmetricMatrix<Scalar>& m, Scalar zero_threshold) {
  if (zero_threshold < 0) throw ArgumentError("zero_threshold must be non-negative");
  return least_positive_eigenvalue(eigendecompose(m), zero_threshold);
}

template <typename Scalar>
Scalar least_positive_eigenvalue(const SymmetricMatrix<Scalar>& m) {
  return least_positive_eigenvalue(m, default_zero_threshold(m));
}

/// Spectral norm, max_i |lambda_i|.
template <typename Scalar>
Scalar operator_norm(const EigenDecomposition<Scalar>& ed) {
  return ed.eigenvalues.cwiseAbs().maxCoeff();
}

template <typename Scalar>
Scalar operator_norm(const SymmetricMatrix<Scalar>& m) {
  return operator_norm(eigendecompose(m));
}

template <typename Scalar>
VectorX<Scalar> project_kernel(const EigenDecomposition<Scalar>& ed, const VectorX<Scalar>& v,
                               Scalar zero_threshold) {
  using std::abs;
  VectorX<Scalar> out = VectorX<Scalar>::Zero(v.size());
  for (Eigen::Index i = 0; i < ed.size(); ++i)
    if (abs(ed.eigenvalues(i)) <= zero_threshold) out += ed.vector(i).dot(v) * ed.vector(i);
  return out;
}

template <typename Scalar>
VectorX<Scalar> project_kernel(const SymmetricMatrix<Scalar>& m, const VectorX<Scalar>& v,
                               Scalar zero_threshold) {
  if (v.size() != m.size()) throw ArgumentError("project_kernel: dimension mismatch");
  return project_kernel(eigendecompose(m), v, zero_threshold);
}

template <typename Scalar>
VectorX<Scalar> project_kernel(const SymmetricMatrix<Scalar>& m, const VectorX<Scalar>& v) {
  return project_kernel(m, v, default_zero_threshold(m));
}

template <typename Scalar>
VectorX<Scalar> project_range(const EigenDecomposition<Scalar>& ed, const VectorX<Scalar>& v,
                              Scalar zero_threshold) {
  return v - project_kernel(ed, v, zero_threshold);
}

template <typename Scalar>
VectorX<Scalar> project_range(const SymmetricMatrix<Scalar>& m, const VectorX<Scalar>& v,
                              Scalar zero_threshold) {
  return v - project_kernel(m, v, zero_threshold);
}

template <typename Scalar>
VectorX<Scalar> project_range(const SymmetricMatrix<Scalar>& m, const VectorX<Scalar>& v) {
  return project_range(m, v, default_zero_threshold(m));
}

inline constexpr double kConsistencyTolerance = 1e-8;

/// Minimum-norm solution of M x = c: the unique x in rge(M) with M x = c.
/// Eigenvalues with |lambda| <= zero_threshold are treated as zero.
template <typename Scalar>
VectorX<Scalar> min_norm_solve(const SymmetricMatrix<Scalar>& m, const EigenDecomposition<Scalar>& ed,
                               const VectorX<Scalar>& c, Scalar zero_threshold) {
  using std::abs;
  if (c.size() != m.size()) throw ArgumentError("min_norm_solve: dimension mismatch");
  VectorX<Scalar> x = VectorX<Scalar>::Zero(c.size());
  for (Eigen::Index i = 0; i < ed.size(); ++i) {
    const Scalar lambda = ed.eigenvalues(i);
    if (abs(lambda) > zero_threshold) x += (ed.vector(i).dot(c) / lambda) * ed.vector(i);
  }
  const Scalar residual = (m.matrix() * x - c).norm();
  if (residual > Scalar(kConsistencyTolerance) * (Scalar(1) + c.norm()))
    throw InconsistentSystemError("inconsistent system: right-hand side is outside the range", double(residual));
  return x;
}

template <typename Scalar>
VectorX<Scalar> min_norm_solve(const SymmetricMatrix<Scalar>& m, const VectorX<Scalar>& c,
                               Scalar zero_threshold) {
  return min_norm_solve(m, eigendecompose(m), c, zero_threshold);
}

template <typename Scalar>
VectorX<Scalar> min_norm_solve(const SymmetricMatrix<Scalar>& m, const VectorX<Scalar>& c) {
  return min_norm_solve(m, c, default_zero_threshold(m));
}

/// Euclidean distance from x to the affine set {y : M y = c} = x_r + ker(M).
template <typename Scalar>
Scalar distance_to_affine_solution_set(const SymmetricMatrix<Scalar>& m, const VectorX<Scalar>& c,
                                       const VectorX<Scalar>& x) {
  if (x.size() != m.size()) throw ArgumentError("distance_to_affine_solution_set: dimension mismatch");
  const auto ed = eigendecompose(m);
  const Scalar thr = default_zero_threshold(m);
  const VectorX<Scalar> xr = min_norm_solve(m, ed, c, thr);
  return project_range(ed, VectorX<Scalar>(x - xr), thr).norm();
}

/// Solves (M + shift I) x = rhs by Cholesky in the Work precision. Throws
/// DataError when M + shift I is not positive definite.
template <typename Work = long double, typename Scalar>
VectorX<Scalar> solve_shifted(const SymmetricMatrix<Scalar>& m, Scalar shift, const VectorX<Scalar>& rhs) {
  if (rhs.size() != m.size()) throw ArgumentError("solve_shifted: dimension mismatch");
  MatrixX<Work> a = m.matrix().template cast<Work>();
  a.diagonal().array() += Work(shift);
  Eigen::LLT<MatrixX<Work>> llt(a);
  if (llt.info() != Eigen::Success) throw DataError("shifted matrix is not positive definite");
  VectorX<Work> x = llt.solve(rhs.template cast<Work>());
  // one refinement step with the residual in Work precision
  const VectorX<Work> r = rhs.template cast<Work>() - a * x;
  x += llt.solve(r);
  return x.template cast<Scalar>();
}

/// Positive-semidefiniteness up to the relative threshold 1e-9 * |M|.
template <typename Scalar>
bool is_positive_semidefinite(const EigenDecomposition<Scalar>& ed, Scalar scale) {
  return ed.eigenvalues(0) >= -Scalar(1e-9) * scale;
}

}  // namespace monoreg
