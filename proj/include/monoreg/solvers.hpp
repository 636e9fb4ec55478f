#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "monoreg/operators.hpp"

namespace monoreg {

enum class StopReason { converged, max_iterations };

std::string to_string(StopReason r);

/// Per-iteration record of a solver run. Scalar series are complete; iterates
/// may be stride-thinned, with `iterate_index[j]` giving the iteration of
/// `iterates[j]`.
struct IterateTrace {
  std::string solver;
  double gamma = 0;
  std::size_t iterations = 0;
  StopReason stop = StopReason::max_iterations;
  std::size_t stride = 1;

  std::vector<std::size_t> iterate_index;
  std::vector<Vector> iterates;
  Vector final_iterate;

  std::vector<double> objective;   // iterations + 1 entries
  std::vector<double> step_norms;  // |x_{k+1} - x_k|, iterations entries
  std::vector<double> residuals;   // r_k (forward-backward DC) or empty
  std::vector<double> descent;     // gamma (f_{k+1} - f_k) + |x_{k+1} - x_k|^2, or empty
  std::vector<double> dist_to_S;   // iterations + 1 entries or empty
};

/// Full traces are kept while n * (iterations + 1) stays within this many numbers.
inline constexpr std::size_t kTraceBudget = 1'000'000;
inline constexpr std::size_t kTraceKeepEnds = 100;
inline constexpr double kDivergenceRadius = 1e8;

struct RunOptions {
  std::size_t max_iters = 1000;
  double stop_tol = 1e-10;
  std::optional<SolutionSet> reference;  // enables dist_to_S
  InnerSolveConfig inner;
};

/// x_{k+1} = J_{gamma A} x_k until |x_{k+1} - x_k| <= stop_tol.
IterateTrace proximal_point(const OperatorSpec& a, double gamma, const Vector& x0, const RunOptions& options = {});

/// Accelerated gradient with step 1/L and momentum (k-1)/(k+2), no restarts.
IterateTrace nesterov_agd(const SmoothGradient& f, const Vector& x0, std::size_t iters,
                          const std::optional<SolutionSet>& reference = std::nullopt);

/// Constant-momentum scheme for a mu-strongly convex f with L-Lipschitz
/// gradient: momentum (sqrt L - sqrt mu) / (sqrt L + sqrt mu), step 1/L.
IterateTrace nesterov_strongly_convex(const SmoothGradient& f, double mu, const Vector& y0, std::size_t iters);

/// Envelope of the classical accelerated scheme: 2 L |x0 - x*|^2 / (k + 2)^2.
double agd_envelope(double L, double initial_distance, std::size_t k);

/// Envelope of the strongly convex scheme applied to f + eps/2 |.|^2:
/// (L + 2 eps)/2 |y0 - x_eps|^2 exp(-k sqrt(eps / (L + eps))).
double strong_envelope(double L, double eps, double initial_distance, std::size_t k);

/// x_{k+1} = J_{gamma dg}(x_k + gamma grad h(x_k)) on f = g - h. Records the
/// residual r_k = grad h(x_k) - grad h(x_{k+1}) - (x_{k+1} - x_k)/gamma and the
/// descent quantity; stops when |r_k| <= stop_tol.
IterateTrace forward_backward_dc(const SubdifferentialComposite& g, const SmoothGradient& h, double gamma,
                                 const Vector& x0, const RunOptions& options = {});

/// DCA: x_{k+1} = argmin g(x) - <grad h(x_k), x>. Stops when the step is <= stop_tol.
IterateTrace dca(const SubdifferentialComposite& g, const SmoothGradient& h, const Vector& x0,
                 const RunOptions& options = {});

/// The convexified pair (gamma g + 1/2|.|^2, gamma h + 1/2|.|^2) on which DCA
/// reproduces the forward-backward iteration.
std::pair<SubdifferentialComposite, SmoothGradient> proximal_dc_pair(const SubdifferentialComposite& g,
                                                                      const SmoothGradient& h, double gamma);

enum class Recommendation { regularize, direct };

std::string to_string(Recommendation r);

struct TradeoffOptions {
  /// Budgets above this are evaluated from the envelope only.
  std::size_t max_measured_iters = 100000;
  /// Minimizer the direct bound is measured against; defaults to x_eps.
  std::optional<Vector> x_star;
  /// Regularized minimizer; computed by tikhonov_solve when absent.
  std::optional<Vector> x_eps;
  /// Points of the (k, S_k) curve.
  std::size_t curve_points = 25;
  InnerSolveConfig inner;
};

struct TradeoffPoint {
  double k = 0;
  double envelope = 0;            // S_k
  double predicted_remainder = 0; // W_k surrogate from S_k
  double direct_bound = 0;
};

struct TradeoffReport {
  std::optional<double> W_k_measured;  // from an actual run, not predictive
  double W_k_predicted = 0;            // 2 S_k + a sqrt(2 eps S_k)
  double R_eps = 0;                    // eps a rho(eps a)
  double nesterov_direct_bound = 0;
  double regularized_bound = 0;        // W_k (measured if available) + R_eps
  std::vector<TradeoffPoint> regularized_bound_curve;
  Recommendation recommendation = Recommendation::direct;
  std::optional<double> crossing_iteration;  // first curve k where regularizing wins
};

/// Compares the direct accelerated bound with W_k + R(eps) at budget k.
TradeoffReport tradeoff_analysis(const SmoothGradient& f, double L, double eps,
                                 const std::optional<RContinuityCertificate>& cert, const Vector& y0, double k,
                                 const TradeoffOptions& options = {});

}  // namespace monoreg
