#include "monoreg/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace monoreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_size(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) throw ArgumentError(std::string(what) + ": dimension mismatch");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

/// Accelerated projected gradient for an L-smooth, mu-strongly convex objective
/// (mu may be 0). Momentum restarts when the step and the momentum direction
/// disagree. Stops on the gradient-mapping residual.
template <class Gradient, class Projection>
InnerSolveResult accelerated_projected_gradient(Gradient&& grad, Projection&& proj, const Vector& start, double L,
                                                double mu, const InnerSolveConfig& inner) {
  Vector x = proj(start);
  Vector y = x;
  double t = 1.0;
  const bool strongly_convex = mu > 0;
  const double beta_fixed =
      strongly_convex ? (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu)) : 0.0;

  for (std::size_t it = 0;; ++it) {
    const Vector gx = grad(x);
    const double residual = L * (x - proj(Vector(x - gx / L))).norm();
    if (!std::isfinite(residual)) throw NumericalError("inner solve produced non-finite values", residual);
    if (residual <= inner.tol) return {x, residual, it};
    if (it >= inner.max_iters)
      throw NumericalError("inner solve did not reach tolerance within " + std::to_string(inner.max_iters) +
                               " iterations",
                           residual);

    Vector x_next = proj(Vector(y - grad(y) / L));
    double beta = beta_fixed;
    if (!strongly_convex) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      beta = (t - 1.0) / t_next;
      t = t_next;
    }
    if ((y - x_next).dot(x_next - x) > 0) {
      y = x_next;
      t = 1.0;
    } else {
      y = x_next + beta * (x_next - x);
    }
    x = std::move(x_next);
  }
}

/// argmin_{u in K} <b, u>; ties resolved toward the projection of `start`.
Vector minimize_linear(const ConstraintSet& k, const Vector& b, const Vector& start) {
  return std::visit(
      overloaded{
          [&](const WholeSpace&) -> Vector {
            if (b.norm() > 0) throw NumericalError("unbounded subproblem: linear objective over the whole space", kInf);
            return start;
          },
          [&](const Box& box) -> Vector {
            Vector u(b.size());
            for (Eigen::Index i = 0; i < b.size(); ++i) {
              if (b(i) > 0)
                u(i) = box.lower(i);
              else if (b(i) < 0)
                u(i) = box.upper(i);
              else
                u(i) = std::clamp(start(i), box.lower(i), box.upper(i));
            }
            return u;
          },
          [&](const Ball& ball) -> Vector {
            const double nb = b.norm();
            if (nb == 0) return monoreg::project(ball, start);
            return ball.center - ball.radius * b / nb;
          },
      },
      k);
}

}  // namespace

// ---------------------------------------------------------------------------
// Constraint sets

ConstraintSet make_box(Vector lower, Vector upper) {
  ConstraintSet k = Box{std::move(lower), std::move(upper)};
  validate(k);
  return k;
}

ConstraintSet make_ball(Vector center, double radius) {
  ConstraintSet k = Ball{std::move(center), radius};
  validate(k);
  return k;
}

void validate(const ConstraintSet& k) {
  std::visit(overloaded{
                 [](const WholeSpace&) {},
                 [](const Box& b) {
                   if (b.lower.size() != b.upper.size() || b.lower.size() == 0)
                     throw DataError("box bounds must be nonempty and of equal dimension");
                   if (!b.lower.allFinite() || !b.upper.allFinite()) throw DataError("box bounds must be finite");
                   for (Eigen::Index i = 0; i < b.lower.size(); ++i)
                     if (b.lower(i) > b.upper(i))
                       throw DataError("box lower bound exceeds upper bound at index " + std::to_string(i));
                 },
                 [](const Ball& b) {
                   if (b.center.size() == 0 || !b.center.allFinite()) throw DataError("ball center must be finite");
                   if (!(b.radius > 0) || !std::isfinite(b.radius)) throw DataError("ball radius must be positive");
                 },
             },
             k);
}

Vector project(const ConstraintSet& k, const Vector& x) {
  return std::visit(overloaded{
                        [&](const WholeSpace&) -> Vector { return x; },
                        [&](const Box& b) -> Vector {
                          require_size(x, b.lower.size(), "project");
                          return x.cwiseMax(b.lower).cwiseMin(b.upper);
                        },
                        [&](const Ball& b) -> Vector {
                          require_size(x, b.center.size(), "project");
                          const Vector d = x - b.center;
                          const double nd = d.norm();
                          if (nd <= b.radius) return x;
                          return b.center + (b.radius / nd) * d;
                        },
                    },
                    k);
}

bool contains(const ConstraintSet& k, const Vector& x, double tol) {
  return std::visit(overloaded{
                        [&](const WholeSpace&) { return true; },
                        [&](const Box& b) {
                          if (x.size() != b.lower.size()) return false;
                          for (Eigen::Index i = 0; i < x.size(); ++i) {
                            if (x(i) < b.lower(i) - tol * (1 + std::abs(b.lower(i)))) return false;
                            if (x(i) > b.upper(i) + tol * (1 + std::abs(b.upper(i)))) return false;
                          }
                          return true;
                        },
                        [&](const Ball& b) {
                          return x.size() == b.center.size() && (x - b.center).norm() <= b.radius * (1 + tol);
                        },
                    },
                    k);
}

bool is_compact(const ConstraintSet& k) { return !std::holds_alternative<WholeSpace>(k); }

std::optional<Eigen::Index> dimension(const ConstraintSet& k) {
  return std::visit(overloaded{
                        [](const WholeSpace&) -> std::optional<Eigen::Index> { return std::nullopt; },
                        [](const Box& b) -> std::optional<Eigen::Index> { return b.lower.size(); },
                        [](const Ball& b) -> std::optional<Eigen::Index> { return b.center.size(); },
                    },
                    k);
}

// ---------------------------------------------------------------------------
// Operators

SubdifferentialComposite::SubdifferentialComposite(SymMatrix Q, Vector q, ConstraintSet K)
    : Q_(std::move(Q)), q_(std::move(q)), K_(std::move(K)) {
  validate(K_);
  if (q_.size() != Q_.size()) throw DataError("composite: q has the wrong dimension");
  if (auto dim = dimension(K_); dim && *dim != Q_.size())
    throw DataError("composite: constraint set has the wrong dimension");
  const auto ed = eigendecompose(Q_);
  if (!is_positive_semidefinite(ed, norm_inf(Q_))) throw DataError("composite: Q is not positive semidefinite");
  min_curvature_ = std::max(ed.eigenvalues(0), 0.0);
  max_curvature_ = std::max(ed.eigenvalues(ed.size() - 1), 0.0);
}

double SubdifferentialComposite::smooth_value(const Vector& x) const {
  const VectorX<long double> xl = x.cast<long double>();
  const long double v = 0.5L * xl.dot(Q_.matrix().cast<long double>() * xl) + q_.cast<long double>().dot(xl);
  return static_cast<double>(v);
}

Vector SubdifferentialComposite::smooth_gradient(const Vector& x) const { return Q_.matrix() * x + q_; }

double SubdifferentialComposite::value(const Vector& x) const {
  if (!contains(K_, x)) return kInf;
  return smooth_value(x);
}

std::string variant_name(const OperatorSpec& a) {
  return std::visit(overloaded{
                        [](const AffineSymmetric&) { return std::string("affine-symmetric"); },
                        [](const SubdifferentialComposite&) { return std::string("subdifferential-composite"); },
                        [](const SignOp&) { return std::string("sign"); },
                        [](const SmoothGradient&) { return std::string("smooth-gradient"); },
                        [](const DcPair&) { return std::string("dc-pair"); },
                    },
                    a);
}

double objective_value(const OperatorSpec& a, const Vector& x) {
  return std::visit(overloaded{
                        [&](const AffineSymmetric& op) {
                          const VectorX<long double> xl = x.cast<long double>();
                          const long double v = 0.5L * xl.dot(op.B.matrix().cast<long double>() * xl) -
                                                op.C.cast<long double>().dot(xl);
                          return static_cast<double>(v);
                        },
                        [&](const SubdifferentialComposite& op) { return op.value(x); },
                        [&](const SignOp&) { return x.lpNorm<1>(); },
                        [&](const SmoothGradient& op) { return op.value(x); },
                        [&](const DcPair& op) { return op.value(x); },
                    },
                    a);
}

SmoothGradient quadratic_function(const SymMatrix& P, const Vector& p) {
  if (p.size() != P.size()) throw DataError("quadratic function: dimension mismatch");
  const auto ed = eigendecompose(P);
  if (!is_positive_semidefinite(ed, norm_inf(P))) throw DataError("quadratic function: P is not positive semidefinite");
  const MatrixX<long double> Pl = P.matrix().cast<long double>();
  const VectorX<long double> pl = p.cast<long double>();
  SmoothGradient f;
  f.lipschitz = std::max(operator_norm(ed), 0.0);
  f.evaluate = [P, p, Pl, pl](const Vector& x) {
    const VectorX<long double> xl = x.cast<long double>();
    Evaluation e;
    e.value = static_cast<double>(0.5L * xl.dot(Pl * xl) + pl.dot(xl));
    e.gradient = P.matrix() * x + p;
    return e;
  };
  return f;
}

SmoothGradient regularized(const SmoothGradient& f, double eps) {
  if (!(eps >= 0)) throw ArgumentError("regularization weight must be non-negative");
  SmoothGradient g;
  g.lipschitz = f.lipschitz + eps;
  g.evaluate = [f, eps](const Vector& x) {
    Evaluation e = f.evaluate(x);
    e.value += 0.5 * eps * x.squaredNorm();
    e.gradient += eps * x;
    return e;
  };
  return g;
}

// ---------------------------------------------------------------------------
// Inner solves and resolvents

InnerSolveResult minimize_composite(const SubdifferentialComposite& g, double tau, const Vector& anchor,
                                    const Vector& shift, const Vector& start, const InnerSolveConfig& inner) {
  const Eigen::Index n = g.size();
  require_size(anchor, n, "minimize_composite");
  require_size(shift, n, "minimize_composite");
  require_size(start, n, "minimize_composite");
  if (!(tau >= 0)) throw ArgumentError("minimize_composite: tau must be non-negative");
  const Vector b = g.q() - shift;

  if (std::holds_alternative<WholeSpace>(g.K())) {
    Vector u;
    if (tau > 0) {
      u = solve_shifted(g.Q(), tau, Vector(tau * anchor - b));
    } else {
      try {
        u = min_norm_solve(g.Q(), Vector(-b));
      } catch (const InconsistentSystemError& e) {
        throw NumericalError("unbounded subproblem: linear term outside the range of Q", e.residual());
      }
    }
    const double residual = (g.Q().matrix() * u + b + tau * (u - anchor)).norm();
    return {u, residual, 0};
  }

  const double L = g.max_curvature() + tau;
  const double mu = g.min_curvature() + tau;
  if (L <= std::numeric_limits<double>::min()) return {minimize_linear(g.K(), b, start), 0.0, 0};

  auto grad = [&](const Vector& u) -> Vector { return g.Q().matrix() * u + b + tau * (u - anchor); };
  auto proj = [&](const Vector& u) -> Vector { return project(g.K(), u); };
  return accelerated_projected_gradient(grad, proj, start, L, mu, inner);
}

InnerSolveResult minimize_smooth(const SmoothGradient& f, double tau, const Vector& anchor, const Vector& start,
                                 const InnerSolveConfig& inner) {
  if (!(tau > 0)) throw ArgumentError("minimize_smooth: tau must be positive");
  auto grad = [&](const Vector& u) -> Vector { return f.gradient(u) + tau * (u - anchor); };
  auto proj = [](const Vector& u) -> Vector { return u; };
  return accelerated_projected_gradient(grad, proj, start, f.lipschitz + tau, tau, inner);
}

Vector resolvent(const SubdifferentialComposite& g, double gamma, const Vector& x, const InnerSolveConfig& inner) {
  if (!(gamma > 0)) throw ArgumentError("resolvent: gamma must be positive");
  return minimize_composite(g, 1.0 / gamma, x, Vector::Zero(x.size()), x, inner).x;
}

Vector resolvent(const OperatorSpec& a, double gamma, const Vector& x, const InnerSolveConfig& inner) {
  if (!(gamma > 0)) throw ArgumentError("resolvent: gamma must be positive");
  return std::visit(overloaded{
                        [&](const AffineSymmetric& op) -> Vector {
                          require_size(x, op.B.size(), "resolvent");
                          try {
                            return solve_shifted(op.B, 1.0 / gamma, Vector(x / gamma + op.C));
                          } catch (const DataError&) {
                            throw DataError("resolvent: Id + gamma B is not positive definite (B not monotone)");
                          }
                        },
                        [&](const SubdifferentialComposite& op) -> Vector {
                          require_size(x, op.size(), "resolvent");
                          return resolvent(op, gamma, x, inner);
                        },
                        [&](const SignOp&) -> Vector {
                          if (x.size() != 1) throw ArgumentError("sign operator is one-dimensional");
                          Vector y(1);
                          y(0) = x(0) - gamma * std::clamp(x(0) / gamma, -1.0, 1.0);
                          return y;
                        },
                        [&](const SmoothGradient& op) -> Vector {
                          return minimize_smooth(op, 1.0 / gamma, x, x, inner).x;
                        },
                        [&](const DcPair&) -> Vector {
                          throw ArgumentError("resolvent is undefined for a DC pair (not monotone)");
                        },
                    },
                    a);
}

Vector forward_step(const SmoothGradient& h, double gamma, const Vector& x) {
  if (!(gamma > 0)) throw ArgumentError("forward_step: gamma must be positive");
  return x + gamma * h.gradient(x);
}

// ---------------------------------------------------------------------------
// Moduli

std::string to_string(ModulusOrigin origin) {
  switch (origin) {
    case ModulusOrigin::affine_psd:
      return "affine-psd";
    case ModulusOrigin::affine_symmetric:
      return "affine-symmetric";
    case ModulusOrigin::quadratic_growth:
      return "quadratic-growth";
    case ModulusOrigin::user_supplied:
      return "user-supplied";
  }
  return "unknown";
}

ModulusFunction::ModulusFunction(double c_, double alpha_, ModulusOrigin origin_)
    : c(c_), alpha(alpha_), origin(origin_) {
  if (!(c >= 0) || !std::isfinite(c)) throw ArgumentError("modulus constant must be finite and non-negative");
  if (!(alpha > 0) || !std::isfinite(alpha)) throw ArgumentError("modulus exponent must be positive");
}

double ModulusFunction::operator()(double s) const {
  if (s < 0) throw ArgumentError("modulus evaluated at a negative argument");
  if (alpha == 1.0) return c * s;
  return c * std::pow(s, alpha);
}

ModulusFunction modulus_affine_psd(const SymMatrix& B) {
  const auto ed = eigendecompose(B);
  if (!is_positive_semidefinite(ed, norm_inf(B))) throw DataError("modulus_affine_psd: B is not positive semidefinite");
  const double k = least_positive_eigenvalue(ed, default_zero_threshold(B));
  return {1.0 / k, 1.0, ModulusOrigin::affine_psd};
}

ModulusFunction modulus_affine_symmetric(const SymMatrix& B) {
  const auto ed = eigendecompose(B);
  const double thr = default_zero_threshold(B);
  // The spectrum of B^2 is {lambda_i^2}; squaring the eigenvalues avoids
  // forming B^2 and doubling its condition number.
  double k2 = kInf;
  for (Eigen::Index i = 0; i < ed.size(); ++i)
    if (std::abs(ed.eigenvalues(i)) > thr) k2 = std::min(k2, ed.eigenvalues(i) * ed.eigenvalues(i));
  if (!std::isfinite(k2)) throw DataError("no positive spectrum: B^2 has no positive eigenvalue");
  return {operator_norm(ed) / k2, 1.0, ModulusOrigin::affine_symmetric};
}

ModulusFunction modulus_from_quadratic_growth(double kappa_f) {
  if (!(kappa_f > 0)) throw ArgumentError("quadratic growth constant must be positive");
  return {2.0 / kappa_f, 1.0, ModulusOrigin::quadratic_growth};
}

ModulusFunction scale_modulus(const ModulusFunction& rho, double k) {
  if (rho.alpha != 1.0) throw ArgumentError("scale_modulus: unsupported for non-Lipschitz moduli (alpha != 1)");
  if (k == 0 || !std::isfinite(k)) throw ArgumentError("scale_modulus: scaling factor must be finite and nonzero");
  return {rho.c / std::abs(k), 1.0, rho.origin};
}

// ---------------------------------------------------------------------------
// Solution sets

AffineSolutionSet::AffineSolutionSet(SymMatrix B, Vector C)
    : B_(std::move(B)), C_(std::move(C)), spectrum_(eigendecompose(B_)), zero_threshold_(default_zero_threshold(B_)) {
  least_norm_ = min_norm_solve(B_, spectrum_, C_, zero_threshold_);
}

Vector AffineSolutionSet::project(const Vector& x) const {
  require_size(x, B_.size(), "AffineSolutionSet::project");
  return least_norm_ + project_kernel(spectrum_, Vector(x - least_norm_), zero_threshold_);
}

double AffineSolutionSet::distance(const Vector& x) const {
  require_size(x, B_.size(), "AffineSolutionSet::distance");
  return project_range(spectrum_, Vector(x - least_norm_), zero_threshold_).norm();
}

double distance(const SolutionSet& s, const Vector& x) {
  return std::visit(overloaded{
                        [&](const AffineSolutionSet& a) { return a.distance(x); },
                        [&](const FiniteSolutionSet& f) {
                          double best = kInf;
                          for (const auto& p : f.points) {
                            require_size(x, p.size(), "distance");
                            best = std::min(best, (x - p).norm());
                          }
                          return best;
                        },
                        [&](const ProductSolutionSet& p) {
                          require_size(x, static_cast<Eigen::Index>(p.coordinates.size()), "distance");
                          double sum = 0;
                          for (std::size_t i = 0; i < p.coordinates.size(); ++i) {
                            double best = kInf;
                            for (double c : p.coordinates[i]) best = std::min(best, std::abs(x(Eigen::Index(i)) - c));
                            sum += best * best;
                          }
                          return std::sqrt(sum);
                        },
                        [&](const ConvexSolutionSet& c) { return (x - project(c.set, x)).norm(); },
                    },
                    s);
}

ProbeReport rcontinuity_probe(std::span<const InverseSample> samples, const SolutionSet& reference,
                              const RContinuityCertificate& cert) {
  ProbeReport report;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double ny = samples[i].y.norm();
    if (ny > cert.sigma || (cert.truncated && samples[i].x.norm() > cert.a * (1 + 1e-12))) {
      ++report.skipped;
      continue;
    }
    ++report.checked;
    const double d = distance(reference, samples[i].x);
    const double bound = cert.rho(ny);
    const double ratio = bound > 0 ? d / bound : (d > 0 ? kInf : 0.0);
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    if (d > bound * (1 + kProbeRelativeSlack) + kProbeAbsoluteSlack)
      report.violations.push_back({i, ny, d, bound, d - bound});
  }
  return report;
}

namespace {

InverseSample affine_sample(const AffineSolutionSet& s, const Vector& y, SplitMix64& rng) {
  const Eigen::Index n = s.B().size();
  Vector x = min_norm_solve(s.B(), s.spectrum(), Vector(s.C() + y), s.zero_threshold());
  x += project_kernel(s.spectrum(), rng.normal_vector(n), s.zero_threshold());
  return {y, x};
}

}  // namespace

std::vector<InverseSample> sample_affine_inverse(const AffineSolutionSet& s, std::size_t count, double radius,
                                                 SplitMix64& rng) {
  std::vector<InverseSample> out;
  out.reserve(count);
  const Eigen::Index n = s.B().size();
  for (std::size_t i = 0; i < count; ++i) {
    Vector y = s.B() * rng.normal_vector(n);
    const double ny = y.norm();
    const double target = radius * rng.uniform(1e-3, 1.0);
    if (ny > 0) y *= target / ny;
    out.push_back(affine_sample(s, y, rng));
  }
  return out;
}

std::vector<InverseSample> sample_affine_least_direction(const AffineSolutionSet& s, std::size_t count,
                                                         double radius, SplitMix64& rng) {
  const auto& ed = s.spectrum();
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < ed.size(); ++i) {
    if (std::abs(ed.eigenvalues(i)) <= s.zero_threshold()) continue;
    if (best < 0 || std::abs(ed.eigenvalues(i)) < std::abs(ed.eigenvalues(best))) best = i;
  }
  if (best < 0) throw DataError("no positive spectrum: B is zero");
  std::vector<InverseSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = radius * rng.uniform(1e-3, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    out.push_back(affine_sample(s, Vector(t * ed.vector(best)), rng));
  }
  return out;
}

}  // namespace monoreg
