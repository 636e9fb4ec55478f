#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "monoreg/linalg.hpp"
#include "monoreg/random.hpp"

namespace monoreg {

using Vector = Eigen::VectorXd;
using SymMatrix = SymmetricMatrix<double>;

// ---------------------------------------------------------------------------
// Constraint sets

struct WholeSpace {};

struct Box {
  Vector lower;
  Vector upper;
};

struct Ball {
  Vector center;
  double radius = 1.0;
};

using ConstraintSet = std::variant<WholeSpace, Box, Ball>;

/// Validated constructors: lower <= upper componentwise, radius > 0.
ConstraintSet make_box(Vector lower, Vector upper);
ConstraintSet make_ball(Vector center, double radius);
void validate(const ConstraintSet& k);

Vector project(const ConstraintSet& k, const Vector& x);
bool contains(const ConstraintSet& k, const Vector& x, double tol = 1e-12);
bool is_compact(const ConstraintSet& k);
/// Dimension the set lives in, or nullopt for WholeSpace.
std::optional<Eigen::Index> dimension(const ConstraintSet& k);

// ---------------------------------------------------------------------------
// Operator specifications

struct InnerSolveConfig {
  double tol = 1e-10;
  std::size_t max_iters = 100000;
};

/// A(x) = B x - C.
struct AffineSymmetric {
  SymMatrix B;
  Vector C;
};

/// A = subdifferential of g1 + I_K, g1(x) = 1/2 <Qx, x> + <q, x>, Q positive semidefinite.
class SubdifferentialComposite {
 public:
  SubdifferentialComposite(SymMatrix Q, Vector q, ConstraintSet K);

  const SymMatrix& Q() const { return Q_; }
  const Vector& q() const { return q_; }
  const ConstraintSet& K() const { return K_; }
  Eigen::Index size() const { return Q_.size(); }
  double min_curvature() const { return min_curvature_; }
  double max_curvature() const { return max_curvature_; }

  /// g1(x); ignores the constraint.
  double smooth_value(const Vector& x) const;
  Vector smooth_gradient(const Vector& x) const;
  /// g1(x) + I_K(x).
  double value(const Vector& x) const;

 private:
  SymMatrix Q_;
  Vector q_;
  ConstraintSet K_;
  double min_curvature_ = 0;
  double max_curvature_ = 0;
};

/// The scalar Sign mapping (subdifferential of |x|), fixed to dimension 1.
struct SignOp {};

struct Evaluation {
  double value = 0;
  Vector gradient;
};

/// A = grad f for a convex f with L-Lipschitz gradient. The callback must be
/// deterministic and reentrant.
struct SmoothGradient {
  std::function<Evaluation(const Vector&)> evaluate;
  double lipschitz = 0;

  double value(const Vector& x) const { return evaluate(x).value; }
  Vector gradient(const Vector& x) const { return evaluate(x).gradient; }
};

/// f = g - h with g convex (composite) and h smooth convex.
struct DcPair {
  SubdifferentialComposite g;
  SmoothGradient h;

  double value(const Vector& x) const { return g.value(x) - h.value(x); }
};

using OperatorSpec = std::variant<AffineSymmetric, SubdifferentialComposite, SignOp, SmoothGradient, DcPair>;

std::string variant_name(const OperatorSpec& a);

/// Potential whose subdifferential is A, when one exists: 1/2<Bx,x> - <C,x>
/// for the affine case, g1 + I_K, |x|, f, and g - h for a DC pair.
double objective_value(const OperatorSpec& a, const Vector& x);

/// h(x) = 1/2 <P x, x> + <p, x>; P positive semidefinite.
SmoothGradient quadratic_function(const SymMatrix& P, const Vector& p);
/// g = f + eps/2 |x|^2 with gradient constant L + eps.
SmoothGradient regularized(const SmoothGradient& f, double eps);

// ---------------------------------------------------------------------------
// Resolvents and forward steps

struct InnerSolveResult {
  Vector x;
  double residual = 0;
  std::size_t iterations = 0;
};

/// Minimizes 1/2<Qu,u> + <q - shift, u> + tau/2 |u - anchor|^2 over K for the
/// composite g. WholeSpace is solved directly; otherwise accelerated projected
/// gradient runs until the gradient-mapping residual is <= inner.tol.
InnerSolveResult minimize_composite(const SubdifferentialComposite& g, double tau, const Vector& anchor,
                                    const Vector& shift, const Vector& start, const InnerSolveConfig& inner);

/// Minimizes f(u) + tau/2 |u - anchor|^2 for a smooth convex f (tau > 0).
InnerSolveResult minimize_smooth(const SmoothGradient& f, double tau, const Vector& anchor, const Vector& start,
                                 const InnerSolveConfig& inner);

/// J_{gamma A}(x) = (Id + gamma A)^{-1}(x).
Vector resolvent(const OperatorSpec& a, double gamma, const Vector& x, const InnerSolveConfig& inner = {});
Vector resolvent(const SubdifferentialComposite& g, double gamma, const Vector& x,
                 const InnerSolveConfig& inner = {});

/// x + gamma grad h(x).
Vector forward_step(const SmoothGradient& h, double gamma, const Vector& x);

// ---------------------------------------------------------------------------
// Continuity moduli

enum class ModulusOrigin { affine_psd, affine_symmetric, quadratic_growth, user_supplied };

std::string to_string(ModulusOrigin origin);

/// rho(s) = c * s^alpha.
struct ModulusFunction {
  double c = 0;
  double alpha = 1;
  ModulusOrigin origin = ModulusOrigin::user_supplied;

  ModulusFunction() = default;
  ModulusFunction(double c, double alpha, ModulusOrigin origin);

  double operator()(double s) const;
};

struct RContinuityCertificate {
  double sigma = 0;  // validity radius
  double a = 0;      // least-norm magnitude
  ModulusFunction rho;
  bool truncated = false;
};

/// Affine A = Bx - C with B PSD: rho(s) = s / k, k the least positive eigenvalue of B.
ModulusFunction modulus_affine_psd(const SymMatrix& B);
/// Affine A with symmetric B: rho(s) = (|B| / k2) s, k2 the least positive eigenvalue of B^2.
ModulusFunction modulus_affine_symmetric(const SymMatrix& B);
/// grad f with quadratic growth constant kappa: rho(s) = 2 s / kappa.
ModulusFunction modulus_from_quadratic_growth(double kappa_f);
/// Modulus of (k A)^{-1} from that of A^{-1}: c / |k|. Lipschitz moduli only.
ModulusFunction scale_modulus(const ModulusFunction& rho, double k);

// ---------------------------------------------------------------------------
// Solution sets and the R-continuity probe

/// {x : B x = C}, with the spectral data needed for exact distances.
class AffineSolutionSet {
 public:
  AffineSolutionSet(SymMatrix B, Vector C);

  const SymMatrix& B() const { return B_; }
  const Vector& C() const { return C_; }
  const EigenDecomposition<double>& spectrum() const { return spectrum_; }
  double zero_threshold() const { return zero_threshold_; }
  /// Minimum-norm solution x_r.
  const Vector& least_norm() const { return least_norm_; }

  Vector project(const Vector& x) const;
  double distance(const Vector& x) const;

 private:
  SymMatrix B_;
  Vector C_;
  EigenDecomposition<double> spectrum_;
  double zero_threshold_ = 0;
  Vector least_norm_;
};

struct FiniteSolutionSet {
  std::vector<Vector> points;
};

/// Cartesian product of finite coordinate sets.
struct ProductSolutionSet {
  std::vector<std::vector<double>> coordinates;
};

struct ConvexSolutionSet {
  ConstraintSet set;
};

using SolutionSet = std::variant<AffineSolutionSet, FiniteSolutionSet, ProductSolutionSet, ConvexSolutionSet>;

double distance(const SolutionSet& s, const Vector& x);

/// One point of the graph of A^{-1}: x in A^{-1}(y).
struct InverseSample {
  Vector y;
  Vector x;
};

struct ProbeViolation {
  std::size_t index = 0;
  double residual_norm = 0;
  double distance = 0;
  double bound = 0;
  double margin = 0;  // distance - bound
};

struct ProbeReport {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double worst_ratio = 0;  // max distance / bound over checked samples
  std::vector<ProbeViolation> violations;

  bool ok() const { return violations.empty(); }
};

/// Relative slack applied to rho before a sample counts as a violation.
inline constexpr double kProbeRelativeSlack = 1e-9;
inline constexpr double kProbeAbsoluteSlack = 1e-12;

/// Checks d(x, S) <= rho(|y|) for each sample with |y| <= sigma. With a
/// truncated certificate, samples whose |x| exceeds cert.a are skipped.
/// The probe can falsify a candidate modulus but never certify one.
ProbeReport rcontinuity_probe(std::span<const InverseSample> samples, const SolutionSet& reference,
                              const RContinuityCertificate& cert);

/// Random samples of the affine inverse: y = B w scaled to |y| <= radius,
/// x = x_r(C + y) plus a random kernel component.
std::vector<InverseSample> sample_affine_inverse(const AffineSolutionSet& s, std::size_t count, double radius,
                                                 SplitMix64& rng);

/// Samples with y along the eigenvector of the least positive |eigenvalue|,
/// where the affine inverse is least contracting.
std::vector<InverseSample> sample_affine_least_direction(const AffineSolutionSet& s, std::size_t count,
                                                         double radius, SplitMix64& rng);

}  // namespace monoreg
