#include "monoreg/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <utility>

#include "monoreg/tikhonov.hpp"

namespace monoreg {

namespace {

/// Keeps every iterate while the trace fits kTraceBudget numbers, otherwise
/// every stride-th one plus the first and last kTraceKeepEnds.
class TraceRecorder {
 public:
  TraceRecorder(IterateTrace& trace, Eigen::Index n, std::size_t max_iters) : trace_(trace) {
    const std::size_t numbers = static_cast<std::size_t>(n) * (max_iters + 1);
    if (numbers > kTraceBudget) stride_ = (numbers + kTraceBudget - 1) / kTraceBudget;
    trace_.stride = stride_;
  }

  void iterate(std::size_t k, const Vector& x) {
    if (stride_ == 1 || k < kTraceKeepEnds || k % stride_ == 0) {
      trace_.iterate_index.push_back(k);
      trace_.iterates.push_back(x);
    } else {
      tail_.emplace_back(k, x);
      if (tail_.size() > kTraceKeepEnds) tail_.pop_front();
    }
  }

  void finish(std::size_t iterations, StopReason stop, const Vector& last) {
    trace_.iterations = iterations;
    trace_.stop = stop;
    trace_.final_iterate = last;
    if (tail_.empty()) return;
    std::vector<std::pair<std::size_t, Vector>> merged;
    merged.reserve(trace_.iterates.size() + tail_.size());
    for (std::size_t j = 0; j < trace_.iterates.size(); ++j)
      merged.emplace_back(trace_.iterate_index[j], std::move(trace_.iterates[j]));
    for (auto& t : tail_) merged.push_back(std::move(t));
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    trace_.iterate_index.clear();
    trace_.iterates.clear();
    for (auto& [k, x] : merged) {
      trace_.iterate_index.push_back(k);
      trace_.iterates.push_back(std::move(x));
    }
  }

 private:
  IterateTrace& trace_;
  std::size_t stride_ = 1;
  std::deque<std::pair<std::size_t, Vector>> tail_;
};

void check_divergence(const Vector& x, std::size_t k, const std::string& solver) {
  const double nx = x.norm();
  if (!std::isfinite(nx) || nx > kDivergenceRadius)
    throw NumericalError(solver + ": iterate norm exceeded the divergence radius at iteration " + std::to_string(k),
                         nx);
}

std::optional<SolutionSet> default_reference(const OperatorSpec& a, const std::optional<SolutionSet>& given) {
  if (given) return given;
  if (const auto* op = std::get_if<AffineSymmetric>(&a)) {
    try {
      return AffineSolutionSet(op->B, op->C);
    } catch (const InconsistentSystemError&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string to_string(StopReason r) { return r == StopReason::converged ? "converged" : "max-iterations"; }

std::string to_string(Recommendation r) { return r == Recommendation::regularize ? "regularize" : "direct"; }

IterateTrace proximal_point(const OperatorSpec& a, double gamma, const Vector& x0, const RunOptions& options) {
  if (!(gamma > 0)) throw ArgumentError("proximal_point: gamma must be positive");
  IterateTrace trace;
  trace.solver = "ppa";
  trace.gamma = gamma;
  const auto reference = default_reference(a, options.reference);
  TraceRecorder rec(trace, x0.size(), options.max_iters);

  auto objective = [&](const Vector& x) {
    return std::holds_alternative<AffineSymmetric>(a) || std::holds_alternative<SubdifferentialComposite>(a) ||
                   std::holds_alternative<SignOp>(a) || std::holds_alternative<SmoothGradient>(a)
               ? objective_value(a, x)
               : std::numeric_limits<double>::quiet_NaN();
  };

  Vector x = x0;
  rec.iterate(0, x);
  trace.objective.push_back(objective(x));
  if (reference) trace.dist_to_S.push_back(distance(*reference, x));

  std::size_t k = 0;
  StopReason stop = StopReason::max_iterations;
  while (k < options.max_iters) {
    Vector next;
    try {
      next = resolvent(a, gamma, x, options.inner);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (ppa iteration " + std::to_string(k) + ")", e.residual());
    }
    ++k;
    check_divergence(next, k, "ppa");
    trace.step_norms.push_back((next - x).norm());
    x = std::move(next);
    rec.iterate(k, x);
    trace.objective.push_back(objective(x));
    if (reference) trace.dist_to_S.push_back(distance(*reference, x));
    if (trace.step_norms.back() <= options.stop_tol) {
      stop = StopReason::converged;
      break;
    }
  }
  rec.finish(k, stop, x);
  return trace;
}

IterateTrace nesterov_agd(const SmoothGradient& f, const Vector& x0, std::size_t iters,
                          const std::optional<SolutionSet>& reference) {
  if (!(f.lipschitz > 0)) throw ArgumentError("nesterov_agd: Lipschitz constant must be positive");
  const double L = f.lipschitz;
  IterateTrace trace;
  trace.solver = "agd";
  trace.gamma = 1.0 / L;
  TraceRecorder rec(trace, x0.size(), iters);

  Vector x_prev = x0;
  Vector y = x0;
  rec.iterate(0, x0);
  trace.objective.push_back(f.value(x0));
  if (reference) trace.dist_to_S.push_back(distance(*reference, x0));

  for (std::size_t k = 1; k <= iters; ++k) {
    Vector x = y - f.gradient(y) / L;
    check_divergence(x, k, "agd");
    const double momentum = (static_cast<double>(k) - 1.0) / (static_cast<double>(k) + 2.0);
    y = x + momentum * (x - x_prev);
    trace.step_norms.push_back((x - x_prev).norm());
    trace.objective.push_back(f.value(x));
    if (reference) trace.dist_to_S.push_back(distance(*reference, x));
    rec.iterate(k, x);
    x_prev = std::move(x);
  }
  rec.finish(iters, StopReason::max_iterations, x_prev);
  return trace;
}

IterateTrace nesterov_strongly_convex(const SmoothGradient& f, double mu, const Vector& y0, std::size_t iters) {
  if (!(mu > 0)) throw ArgumentError("nesterov_strongly_convex: mu must be positive");
  const double L = f.lipschitz;
  if (!(L >= mu)) throw ArgumentError("nesterov_strongly_convex: need L >= mu");
  const double beta = (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu));

  IterateTrace trace;
  trace.solver = "agd-strong";
  trace.gamma = 1.0 / L;
  TraceRecorder rec(trace, y0.size(), iters);

  Vector x_prev = y0;
  Vector y = y0;
  rec.iterate(0, y0);
  trace.objective.push_back(f.value(y0));
  for (std::size_t k = 1; k <= iters; ++k) {
    Vector x = y - f.gradient(y) / L;
    check_divergence(x, k, "agd-strong");
    y = x + beta * (x - x_prev);
    trace.step_norms.push_back((x - x_prev).norm());
    trace.objective.push_back(f.value(x));
    rec.iterate(k, x);
    x_prev = std::move(x);
  }
  rec.finish(iters, StopReason::max_iterations, x_prev);
  return trace;
}

double agd_envelope(double L, double initial_distance, std::size_t k) {
  const double kk = static_cast<double>(k) + 2.0;
  return 2.0 * L * initial_distance * initial_distance / (kk * kk);
}

double strong_envelope(double L, double eps, double initial_distance, std::size_t k) {
  return 0.5 * (L + 2.0 * eps) * initial_distance * initial_distance *
         std::exp(-static_cast<double>(k) * std::sqrt(eps / (L + eps)));
}

IterateTrace forward_backward_dc(const SubdifferentialComposite& g, const SmoothGradient& h, double gamma,
                                 const Vector& x0, const RunOptions& options) {
  if (!(gamma > 0)) throw ArgumentError("forward_backward_dc: gamma must be positive");
  if (x0.size() != g.size()) throw ArgumentError("forward_backward_dc: dimension mismatch");
  IterateTrace trace;
  trace.solver = "fb-dc";
  trace.gamma = gamma;
  TraceRecorder rec(trace, x0.size(), options.max_iters);

  auto f = [&](const Vector& x) { return g.value(x) - h.value(x); };

  Vector x = x0;
  Vector grad_h = h.gradient(x);
  double fx = f(x);
  rec.iterate(0, x);
  trace.objective.push_back(fx);
  if (options.reference) trace.dist_to_S.push_back(distance(*options.reference, x));

  std::size_t k = 0;
  StopReason stop = StopReason::max_iterations;
  while (k < options.max_iters) {
    Vector next;
    try {
      next = resolvent(g, gamma, Vector(x + gamma * grad_h), options.inner);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (fb-dc iteration " + std::to_string(k) + ")", e.residual());
    }
    ++k;
    check_divergence(next, k, "fb-dc");
    const Vector grad_h_next = h.gradient(next);
    const Vector step = next - x;
    const Vector r = grad_h - grad_h_next - step / gamma;
    const double f_next = f(next);
    if (!std::isfinite(f_next))
      throw NumericalError("fb-dc: objective is not finite at iteration " + std::to_string(k), f_next);

    trace.step_norms.push_back(step.norm());
    trace.residuals.push_back(r.norm());
    trace.descent.push_back(gamma * (f_next - fx) + step.squaredNorm());
    trace.objective.push_back(f_next);
    if (options.reference) trace.dist_to_S.push_back(distance(*options.reference, next));
    rec.iterate(k, next);

    x = std::move(next);
    grad_h = grad_h_next;
    fx = f_next;
    if (trace.residuals.back() <= options.stop_tol) {
      stop = StopReason::converged;
      break;
    }
  }
  rec.finish(k, stop, x);
  return trace;
}

IterateTrace dca(const SubdifferentialComposite& g, const SmoothGradient& h, const Vector& x0,
                 const RunOptions& options) {
  if (x0.size() != g.size()) throw ArgumentError("dca: dimension mismatch");
  IterateTrace trace;
  trace.solver = "dca";
  TraceRecorder rec(trace, x0.size(), options.max_iters);
  auto f = [&](const Vector& x) { return g.value(x) - h.value(x); };

  const Vector zero = Vector::Zero(x0.size());
  Vector x = x0;
  rec.iterate(0, x);
  trace.objective.push_back(f(x));
  if (options.reference) trace.dist_to_S.push_back(distance(*options.reference, x));

  std::size_t k = 0;
  StopReason stop = StopReason::max_iterations;
  while (k < options.max_iters) {
    Vector next;
    try {
      next = minimize_composite(g, 0.0, zero, h.gradient(x), x, options.inner).x;
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (dca iteration " + std::to_string(k) + ")", e.residual());
    }
    ++k;
    check_divergence(next, k, "dca");
    trace.step_norms.push_back((next - x).norm());
    x = std::move(next);
    trace.objective.push_back(f(x));
    if (options.reference) trace.dist_to_S.push_back(distance(*options.reference, x));
    rec.iterate(k, x);
    if (trace.step_norms.back() <= options.stop_tol) {
      stop = StopReason::converged;
      break;
    }
  }
  rec.finish(k, stop, x);
  return trace;
}

std::pair<SubdifferentialComposite, SmoothGradient> proximal_dc_pair(const SubdifferentialComposite& g,
                                                                      const SmoothGradient& h, double gamma) {
  if (!(gamma > 0)) throw ArgumentError("proximal_dc_pair: gamma must be positive");
  const Eigen::Index n = g.size();
  SymMatrix Q(MatrixX<double>(gamma * g.Q().matrix() + MatrixX<double>::Identity(n, n)));
  SubdifferentialComposite g2(std::move(Q), gamma * g.q(), g.K());
  SmoothGradient h2;
  h2.lipschitz = gamma * h.lipschitz + 1.0;
  h2.evaluate = [h, gamma](const Vector& x) {
    Evaluation e = h.evaluate(x);
    e.value = gamma * e.value + 0.5 * x.squaredNorm();
    e.gradient = gamma * e.gradient + x;
    return e;
  };
  return {std::move(g2), std::move(h2)};
}

TradeoffReport tradeoff_analysis(const SmoothGradient& f, double L, double eps,
                                 const std::optional<RContinuityCertificate>& cert, const Vector& y0, double k,
                                 const TradeoffOptions& options) {
  if (!cert) throw ArgumentError("tradeoff_analysis: a continuity certificate is required");
  if (!(L > 0)) throw ArgumentError("tradeoff_analysis: L must be positive");
  if (!(eps >= 0)) throw ArgumentError("tradeoff_analysis: eps must be non-negative");
  if (!(k >= 0)) throw ArgumentError("tradeoff_analysis: iteration budget must be non-negative");

  const double a = cert->a;
  Vector x_eps;
  if (options.x_eps) {
    x_eps = *options.x_eps;
  } else if (eps > 0) {
    x_eps = tikhonov_solve(SmoothGradient(f), eps, options.inner, &y0);
  } else if (options.x_star) {
    x_eps = *options.x_star;
  } else {
    throw ArgumentError("tradeoff_analysis: eps = 0 needs a reference minimizer");
  }
  const Vector x_star = options.x_star ? *options.x_star : x_eps;
  const double d_direct = (y0 - x_star).norm();
  const double d_reg = (y0 - x_eps).norm();

  TradeoffReport report;
  report.R_eps = eps * a * cert->rho(eps * a);

  auto envelope = [&](double kk) {
    return 0.5 * (L + 2.0 * eps) * d_reg * d_reg * std::exp(-kk * std::sqrt(eps / (L + eps)));
  };
  // (eps/2)|y_k - x_eps|^2 <= S_k bounds the two distance terms of W_k.
  auto predicted = [&](double kk) {
    const double s = envelope(kk);
    return 2.0 * s + a * std::sqrt(2.0 * eps * s);
  };
  auto direct = [&](double kk) { return 2.0 * L * d_direct * d_direct / ((kk + 2.0) * (kk + 2.0)); };

  report.W_k_predicted = predicted(k);
  report.nesterov_direct_bound = direct(k);

  if (eps > 0 && k <= static_cast<double>(options.max_measured_iters)) {
    const SmoothGradient g = regularized(f, eps);
    const auto iters = static_cast<std::size_t>(k);
    const IterateTrace run = nesterov_strongly_convex(g, eps, y0, iters);
    const Vector& yk = run.final_iterate;
    const double dk = (yk - x_eps).norm();
    report.W_k_measured = (g.value(yk) - g.value(x_eps)) + 0.5 * eps * dk * dk + eps * a * dk;
  }
  report.regularized_bound = (report.W_k_measured ? *report.W_k_measured : report.W_k_predicted) + report.R_eps;
  report.recommendation =
      report.regularized_bound < report.nesterov_direct_bound ? Recommendation::regularize : Recommendation::direct;

  const std::size_t points = std::max<std::size_t>(options.curve_points, 2);
  const double k_max = std::max(k, 1.0);
  for (std::size_t j = 0; j < points; ++j) {
    const double kk =
        std::round(std::pow(10.0, std::log10(k_max) * static_cast<double>(j) / static_cast<double>(points - 1)));
    if (!report.regularized_bound_curve.empty() && kk <= report.regularized_bound_curve.back().k) continue;
    TradeoffPoint p{kk, envelope(kk), predicted(kk), direct(kk)};
    if (!report.crossing_iteration && p.predicted_remainder + report.R_eps < p.direct_bound)
      report.crossing_iteration = kk;
    report.regularized_bound_curve.push_back(p);
  }
  return report;
}

}  // namespace monoreg
