#pragma once

// Test-only reference computations. Nothing here calls into the library's
// eigensolver or solvers.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

struct Tridiagonal {
  std::vector<long double> diag;
  std::vector<long double> off;
};

/// Householder reduction of a symmetric matrix to tridiagonal form.
inline Tridiagonal tridiagonalize(const Eigen::MatrixXd& m) {
  LMat a = m.cast<long double>();
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    LVec x = a.col(k).tail(n - k - 1);
    const long double alpha = (x(0) >= 0 ? -1.0L : 1.0L) * x.norm();
    if (alpha == 0) continue;
    LVec v = x;
    v(0) -= alpha;
    const long double vn = v.norm();
    if (vn == 0) continue;
    v /= vn;
    LMat h = LMat::Identity(n, n);
    h.block(k + 1, k + 1, n - k - 1, n - k - 1) -= 2.0L * v * v.transpose();
    a = h * a * h;
  }
  Tridiagonal t;
  for (Eigen::Index i = 0; i < n; ++i) t.diag.push_back(a(i, i));
  for (Eigen::Index i = 0; i + 1 < n; ++i) t.off.push_back(a(i + 1, i));
  return t;
}

/// Number of eigenvalues of T strictly below x: sign changes of the leading
/// principal minors of T - x I (Sturm sequence of the characteristic polynomial).
inline int sturm_count(const Tridiagonal& t, long double x) {
  int count = 0;
  long double q = 1;
  for (std::size_t i = 0; i < t.diag.size(); ++i) {
    const long double b2 = i == 0 ? 0.0L : t.off[i - 1] * t.off[i - 1];
    q = t.diag[i] - x - (i == 0 ? 0.0L : b2 / q);
    if (q == 0) q = -1e-300L;
    if (q < 0) ++count;
  }
  return count;
}

/// All eigenvalues ascending, each found by bisection on the Sturm count.
inline std::vector<double> eigenvalues_by_bisection(const Eigen::MatrixXd& m) {
  const Tridiagonal t = tridiagonalize(m);
  const long double bound = m.cwiseAbs().rowwise().sum().maxCoeff() + 1.0L;
  std::vector<double> out;
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    long double lo = -bound, hi = bound;
    for (int it = 0; it < 200; ++it) {
      const long double mid = 0.5L * (lo + hi);
      if (sturm_count(t, mid) > k)
        hi = mid;
      else
        lo = mid;
    }
    out.push_back(static_cast<double>(0.5L * (lo + hi)));
  }
  return out;
}

/// Roots of x^2 - s x + p by the quadratic formula, ascending.
inline std::pair<long double, long double> quadratic_roots(long double s, long double p) {
  const long double disc = std::sqrt(s * s / 4 - p);
  const long double big = s / 2 + disc;
  return {p / big, big};
}

/// min_t |x - (base + t u)| by a dense grid followed by golden-section refinement.
inline double distance_to_line_by_grid(const Eigen::VectorXd& x, const Eigen::VectorXd& base,
                                       const Eigen::VectorXd& u, double t_lo, double t_hi) {
  auto dist = [&](double t) { return (x - base - t * u).norm(); };
  const int n = 20001;
  double best_t = t_lo, best = dist(t_lo);
  for (int i = 1; i < n; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / (n - 1);
    if (dist(t) < best) best = dist(t), best_t = t;
  }
  const double h = (t_hi - t_lo) / (n - 1);
  double a = best_t - h, b = best_t + h;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (dist(c) < dist(d))
      b = d;
    else
      a = c;
  }
  return std::min(best, dist(0.5 * (a + b)));
}

}  // namespace oracle
