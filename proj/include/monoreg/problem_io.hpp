#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "monoreg/operators.hpp"

namespace monoreg {

/// 1/2 <Bx, x> - <C, x>, i.e. A = Bx - C. L is an optional gradient constant.
struct QuadraticProblem {
  SymMatrix B;
  Vector C;
  std::optional<double> L;
};

/// 1/2 <Qx, x> + <q, x> + I_K(x).
struct CompositeProblem {
  SymMatrix Q;
  Vector q;
  ConstraintSet K;
};

/// g - h with g composite and h(x) = 1/2 <Px, x> + <p, x>.
struct DcProblem {
  CompositeProblem g;
  SymMatrix P;
  Vector p;
};

/// The scalar Sign mapping.
struct SignProblem {};

/// A named smooth convex function of data (A, b):
///   least-squares: 1/2 |Ax - b|^2
///   logistic:      sum_i log(1 + exp(-b_i <a_i, x>)), labels b_i in {-1, 1}
struct SmoothNamedProblem {
  std::string function;
  Eigen::MatrixXd A;
  Vector b;
};

using ProblemData = std::variant<QuadraticProblem, CompositeProblem, DcProblem, SignProblem, SmoothNamedProblem>;

/// The problem's own affine solution set {x : Bx = C}; quadratic problems only.
struct AffineSetTag {};

using SolutionSetSpec = std::variant<AffineSetTag, FiniteSolutionSet, ProductSolutionSet, ConvexSolutionSet>;

struct ModulusSpec {
  double c = 0;
  double alpha = 1;
  double sigma = std::numeric_limits<double>::infinity();
  std::optional<double> a;
  bool truncated = false;
};

struct ProblemMetadata {
  std::optional<SolutionSetSpec> solution_set;
  std::optional<double> f_star;
  std::optional<ModulusSpec> modulus;
  std::optional<Vector> x0;
  std::optional<Vector> x_star;
};

struct ProblemFile {
  ProblemData data;
  ProblemMetadata metadata;
};

std::string kind_name(const ProblemData& data);
Eigen::Index dimension(const ProblemData& data);

/// Relative asymmetry above which a matrix in a problem file is rejected.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Parses and validates a problem. `origin` names the source in error messages.
/// Syntax errors report line and column; validation errors name the invariant.
ProblemFile parse_problem(const std::string& text, const std::string& origin = "<string>");
ProblemFile load_problem(const std::filesystem::path& path);

std::string serialize_problem(const ProblemFile& problem);
void write_problem(const ProblemFile& problem, const std::filesystem::path& path);

/// The operator the problem describes: AffineSymmetric, SubdifferentialComposite,
/// DcPair, SignOp or SmoothGradient.
OperatorSpec to_operator(const ProblemFile& problem);

/// The smooth function minimized by gradient methods: 1/2<Bx,x> - <C,x> for a
/// quadratic problem, the named function otherwise.
SmoothGradient to_smooth(const ProblemFile& problem);

/// Gradient constant of to_smooth: L from the file if given, else computed.
double smooth_lipschitz(const ProblemFile& problem);

std::optional<SolutionSet> reference_set(const ProblemFile& problem);
std::optional<RContinuityCertificate> certificate(const ProblemFile& problem);

}  // namespace monoreg
