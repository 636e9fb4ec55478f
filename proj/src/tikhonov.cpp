#include "monoreg/tikhonov.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace monoreg {

namespace {

constexpr double kBoundRelativeSlack = 1e-9;
constexpr double kBoundAbsoluteSlack = 1e-13;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

bool exceeds(double value, double bound) {
  return value > bound * (1 + kBoundRelativeSlack) + kBoundAbsoluteSlack;
}

std::string at_eps(const std::string& what, double eps) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (at eps = " << eps << ")";
  return os.str();
}

/// proj_S(0) when S is described explicitly.
std::optional<Vector> least_norm_of(const SolutionSet& s) {
  return std::visit(overloaded{
                        [](const AffineSolutionSet& a) -> std::optional<Vector> { return a.least_norm(); },
                        [](const FiniteSolutionSet& f) -> std::optional<Vector> {
                          if (f.points.empty()) return std::nullopt;
                          const Vector* best = &f.points.front();
                          for (const auto& p : f.points)
                            if (p.norm() < best->norm()) best = &p;
                          return *best;
                        },
                        [](const ProductSolutionSet& p) -> std::optional<Vector> {
                          Vector x(static_cast<Eigen::Index>(p.coordinates.size()));
                          for (std::size_t i = 0; i < p.coordinates.size(); ++i) {
                            if (p.coordinates[i].empty()) return std::nullopt;
                            double best = p.coordinates[i].front();
                            for (double c : p.coordinates[i])
                              if (std::abs(c) < std::abs(best)) best = c;
                            x(Eigen::Index(i)) = best;
                          }
                          return x;
                        },
                        [](const ConvexSolutionSet& c) -> std::optional<Vector> {
                          auto dim = dimension(c.set);
                          if (!dim) return std::nullopt;
                          return project(c.set, Vector::Zero(*dim));
                        },
                    },
                    s);
}

}  // namespace

Vector tikhonov_solve(const OperatorSpec& a, double eps, const InnerSolveConfig& inner, const Vector* warm_start) {
  if (!(eps > 0)) throw ArgumentError("tikhonov_solve: eps must be positive");
  return std::visit(
      overloaded{
          [&](const AffineSymmetric& op) -> Vector {
            if (op.C.size() != op.B.size()) throw ArgumentError("tikhonov_solve: dimension mismatch");
            try {
              return solve_shifted(op.B, eps, op.C);
            } catch (const DataError&) {
              throw DataError("tikhonov_solve: B + eps I is not positive definite (B not monotone)");
            }
          },
          [&](const SubdifferentialComposite& op) -> Vector {
            const Vector zero = Vector::Zero(op.size());
            const Vector start = warm_start ? *warm_start : project(op.K(), zero);
            return minimize_composite(op, eps, zero, zero, start, inner).x;
          },
          [&](const SignOp&) -> Vector { return Vector::Zero(1); },
          [&](const SmoothGradient& op) -> Vector {
            if (!warm_start) throw ArgumentError("tikhonov_solve: smooth operators need a starting point");
            const Vector zero = Vector::Zero(warm_start->size());
            return minimize_smooth(op, eps, zero, *warm_start, inner).x;
          },
          [&](const DcPair&) -> Vector {
            throw ArgumentError("tikhonov_solve: a DC pair is not monotone");
          },
      },
      a);
}

LeastNormSolution least_norm_solution(const OperatorSpec& a, const InnerSolveConfig& inner, double eps_floor,
                                      const std::optional<RContinuityCertificate>& cert) {
  if (const auto* op = std::get_if<AffineSymmetric>(&a)) {
    try {
      return {AffineSolutionSet(op->B, op->C).least_norm(), false, std::nullopt};
    } catch (const InconsistentSystemError& e) {
      throw InconsistentSystemError("least_norm_solution: solution set is empty (inconsistent system)", e.residual());
    }
  }
  if (std::holds_alternative<SignOp>(a)) return {Vector::Zero(1), false, std::nullopt};

  LeastNormSolution out;
  out.x = tikhonov_solve(a, eps_floor, inner);
  out.approximate = true;
  if (cert && within_validity(*cert, eps_floor)) out.accuracy = path_distance_bounds(*cert, eps_floor).rate;
  return out;
}

bool within_validity(const RContinuityCertificate& cert, double eps) {
  if (!(eps > 0)) return false;
  if (cert.a == 0) return eps <= cert.sigma;
  return eps <= cert.sigma / cert.a;
}

DistanceBounds path_distance_bounds(const RContinuityCertificate& cert, double eps) {
  if (!within_validity(cert, eps))
    throw ArgumentError(at_eps("eps violates the smallness condition eps <= sigma / a", eps));
  const double rho = cert.rho(eps * cert.a);
  return {rho, rho + std::sqrt(rho * rho + 2.0 * rho * cert.a)};
}

double objective_gap_bound(const RContinuityCertificate& cert, double eps) {
  if (!within_validity(cert, eps))
    throw ArgumentError(at_eps("eps violates the smallness condition eps <= sigma / a", eps));
  return cert.a * cert.rho(eps * cert.a) * eps;
}

LipschitzPathBounds lipschitz_path_bounds(double c, double a, double eps) {
  if (!(c >= 0) || !(a >= 0) || !(eps > 0))
    throw ArgumentError("lipschitz_path_bounds: need c >= 0, a >= 0, eps > 0");
  const double ce = c * eps;
  return {c * a * eps, a * (ce + std::sqrt(ce * ce + 2.0 * ce)), c * a * a * eps * eps};
}

double quadratic_gap(const SymMatrix& B, const Vector& C, const Vector& x, const Vector& ref) {
  const MatrixX<long double> Bl = B.matrix().cast<long double>();
  const VectorX<long double> rl = ref.cast<long double>();
  const VectorX<long double> d = x.cast<long double>() - rl;
  const VectorX<long double> g = Bl * rl - C.cast<long double>();
  return static_cast<double>(g.dot(d) + 0.5L * d.dot(Bl * d));
}

std::vector<double> geometric_schedule(double eps0, std::size_t count) {
  if (!(eps0 > 0)) throw ArgumentError("geometric_schedule: eps0 must be positive");
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) out.push_back(eps0 * std::pow(10.0, -static_cast<double>(j)));
  return out;
}

RContinuityCertificate affine_certificate(const AffineSymmetric& a) {
  RContinuityCertificate cert;
  cert.rho = modulus_affine_psd(a.B);
  cert.a = AffineSolutionSet(a.B, a.C).least_norm().norm();
  cert.sigma = std::numeric_limits<double>::infinity();
  cert.truncated = false;
  return cert;
}

PathReport tikhonov_path(const OperatorSpec& a, const std::vector<double>& schedule, const PathOptions& options) {
  if (schedule.empty()) throw ArgumentError("tikhonov_path: empty schedule");
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    if (!(schedule[j] > 0)) throw ArgumentError("tikhonov_path: schedule entries must be positive");
    if (j > 0 && !(schedule[j] < schedule[j - 1]))
      throw ArgumentError("tikhonov_path: schedule must be strictly decreasing");
  }

  const auto* affine = std::get_if<AffineSymmetric>(&a);
  std::optional<SolutionSet> reference = options.reference;
  if (affine && !reference) {
    try {
      reference = AffineSolutionSet(affine->B, affine->C);
    } catch (const InconsistentSystemError&) {
      // S is empty: the path has no limit, distances are unavailable.
    }
  }
  if (std::holds_alternative<SignOp>(a) && !reference)
    reference = FiniteSolutionSet{{Vector::Zero(1)}};

  PathReport report;
  if (reference) {
    report.x_tilde = least_norm_of(*reference);
    report.x_tilde_exact = report.x_tilde.has_value();
  }

  std::optional<Vector> previous;
  for (double eps : schedule) {
    TikhonovPathPoint p;
    p.eps = eps;
    try {
      if (std::holds_alternative<SmoothGradient>(a) && !previous) {
        const Eigen::Index n = report.x_tilde ? report.x_tilde->size() : 0;
        if (n == 0) throw ArgumentError("tikhonov_path: smooth operators need a reference solution set");
        const Vector zero = Vector::Zero(n);
        p.x_eps = tikhonov_solve(a, eps, options.inner, &zero);
      } else {
        p.x_eps = tikhonov_solve(a, eps, options.inner, previous ? &*previous : nullptr);
      }
    } catch (const NumericalError& e) {
      throw NumericalError(at_eps(e.what(), eps), e.residual());
    } catch (const InconsistentSystemError& e) {
      throw InconsistentSystemError(at_eps(e.what(), eps), e.residual());
    } catch (const DataError& e) {
      throw DataError(at_eps(e.what(), eps));
    } catch (const ArgumentError& e) {
      throw ArgumentError(at_eps(e.what(), eps));
    }
    previous = p.x_eps;
    p.norm_x_eps = p.x_eps.norm();

    if (reference) p.dist_to_S = distance(*reference, p.x_eps);
    if (report.x_tilde) p.distance_to_least_norm = (p.x_eps - *report.x_tilde).norm();

    if (options.cert && within_validity(*options.cert, eps)) {
      const auto b = path_distance_bounds(*options.cert, eps);
      p.dist_bound = b.distance;
      p.rate_bound = b.rate;
      p.gap_bound = objective_gap_bound(*options.cert, eps);
    }

    if (affine) {
      p.residual = (affine->B.matrix() * p.x_eps + eps * p.x_eps - affine->C).norm();
      if (report.x_tilde) p.measured_gap = quadratic_gap(affine->B, affine->C, p.x_eps, *report.x_tilde);
    } else if (options.f_star) {
      p.measured_gap = objective_value(a, p.x_eps) - *options.f_star;
    }

    auto check = [&](const char* name, const std::optional<double>& value, const std::optional<double>& bound) {
      if (value && bound && exceeds(*value, *bound)) report.violations.push_back({eps, name, *value, *bound});
    };
    if (report.x_tilde) {
      const double a_norm = report.x_tilde->norm();
      if (p.norm_x_eps > a_norm + 1e-9 * std::max(1.0, a_norm))
        report.violations.push_back({eps, "norm-exceeds-least-norm", p.norm_x_eps, a_norm});
    }
    check("distance-bound", p.dist_to_S, p.dist_bound);
    check("rate-bound", p.distance_to_least_norm, p.rate_bound);
    check("gap-bound", p.measured_gap, p.gap_bound);
    if (p.residual && *p.residual > 1e-9 * (1 + affine->C.norm()))
      report.violations.push_back({eps, "regularized-residual", *p.residual, 1e-9 * (1 + affine->C.norm())});

    if (!report.points.empty() && p.norm_x_eps < report.points.back().norm_x_eps - 1e-10)
      report.monotonicity_ok = false;
    report.points.push_back(std::move(p));
  }
  return report;
}

}  // namespace monoreg
