#pragma once

#include <optional>
#include <string>
#include <vector>

#include "monoreg/operators.hpp"

namespace monoreg {

/// The unique x_eps with 0 in (A + eps Id)(x_eps). `warm_start` seeds the
/// inner solver only and does not change the result beyond inner tolerances.
Vector tikhonov_solve(const OperatorSpec& a, double eps, const InnerSolveConfig& inner = {},
                      const Vector* warm_start = nullptr);

inline constexpr double kLeastNormEpsFloor = 1e-10;

struct LeastNormSolution {
  Vector x;
  bool approximate = false;
  /// For approximate solutions, |x - x_tilde| <= accuracy when a modulus is known.
  std::optional<double> accuracy;
};

/// proj_S(0). Exact for the affine case; otherwise the regularized solution at
/// eps_floor, flagged approximate.
LeastNormSolution least_norm_solution(const OperatorSpec& a, const InnerSolveConfig& inner = {},
                                      double eps_floor = kLeastNormEpsFloor,
                                      const std::optional<RContinuityCertificate>& cert = std::nullopt);

struct DistanceBounds {
  double distance = 0;  // d(x_eps, S) <= rho(eps a)
  double rate = 0;      // |x_eps - x_tilde| <= rho + sqrt(rho^2 + 2 rho a)
};

/// True when eps satisfies the smallness condition eps <= sigma / a
/// (vacuous for a = 0 beyond eps <= sigma).
bool within_validity(const RContinuityCertificate& cert, double eps);

/// Throws ArgumentError when eps violates eps <= sigma / a.
DistanceBounds path_distance_bounds(const RContinuityCertificate& cert, double eps);

/// f(x_eps) - f* <= a rho(eps a) eps.
double objective_gap_bound(const RContinuityCertificate& cert, double eps);

struct LipschitzPathBounds {
  double iterate = 0;     // c a eps
  double least_norm = 0;  // a (c eps + sqrt(c^2 eps^2 + 2 c eps))
  double gap = 0;         // c a^2 eps^2
};

/// Closed forms for a Lipschitz modulus rho(s) = c s.
LipschitzPathBounds lipschitz_path_bounds(double c, double a, double eps);

/// f(x) - f(ref) for f = 1/2<Bx,x> - <C,x>, expanded about ref so the
/// difference does not cancel: <B ref - C, d> + 1/2 <B d, d>, d = x - ref.
double quadratic_gap(const SymMatrix& B, const Vector& C, const Vector& x, const Vector& ref);

/// eps_j = eps0 * 10^-j, j = 0..count-1.
std::vector<double> geometric_schedule(double eps0 = 1.0, std::size_t count = 8);

struct TikhonovPathPoint {
  double eps = 0;
  Vector x_eps;
  double norm_x_eps = 0;
  std::optional<double> dist_to_S;
  std::optional<double> dist_bound;
  std::optional<double> rate_bound;
  std::optional<double> distance_to_least_norm;
  std::optional<double> gap_bound;
  std::optional<double> measured_gap;
  std::optional<double> residual;  // |(B + eps I) x_eps - C| for the affine case
};

struct PathViolation {
  double eps = 0;
  std::string check;
  double value = 0;
  double bound = 0;
};

struct PathReport {
  std::vector<TikhonovPathPoint> points;  // decreasing eps
  std::optional<Vector> x_tilde;
  bool x_tilde_exact = false;
  bool monotonicity_ok = true;
  std::vector<PathViolation> violations;

  bool ok() const { return monotonicity_ok && violations.empty(); }
};

struct PathOptions {
  std::optional<RContinuityCertificate> cert;
  /// Needed for distances on non-affine operators.
  std::optional<SolutionSet> reference;
  /// Known optimal value, enables measured gaps on non-affine operators.
  std::optional<double> f_star;
  InnerSolveConfig inner;
};

/// Computes x_eps along a strictly decreasing schedule and audits every point
/// against the available bounds.
PathReport tikhonov_path(const OperatorSpec& a, const std::vector<double>& schedule, const PathOptions& options = {});

/// Certificate for an affine PSD operator: rho(s) = s / k, a = |x_tilde|, sigma = inf.
RContinuityCertificate affine_certificate(const AffineSymmetric& a);

}  // namespace monoreg
