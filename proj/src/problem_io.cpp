#include "monoreg/problem_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "monoreg/errors.hpp"
#include "monoreg/tikhonov.hpp"

namespace monoreg {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& origin, const std::string& what) {
  throw DataError(origin + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& origin, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) invalid(origin, where + ": missing field '" + key + "'");
  return obj.at(key);
}

double read_number(const json& j, const std::string& origin, const std::string& where) {
  if (!j.is_number()) invalid(origin, where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(origin, where + ": number is not finite");
  return v;
}

Vector read_vector(const json& j, const std::string& origin, const std::string& where) {
  if (!j.is_array() || j.empty()) invalid(origin, where + ": expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = read_number(j[i], origin, where + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::MatrixXd read_matrix(const json& j, const std::string& origin, const std::string& where) {
  if (!j.is_array() || j.empty()) invalid(origin, where + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) invalid(origin, where + "[0]: expected a non-empty row");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string w = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) invalid(origin, w + ": rows must all have length " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = read_number(j[r][c], origin, w);
  }
  return m;
}

SymMatrix read_symmetric(const json& j, const std::string& origin, const std::string& where) {
  const Eigen::MatrixXd m = read_matrix(j, origin, where);
  if (m.rows() != m.cols()) invalid(origin, where + ": matrix must be square");
  try {
    return SymMatrix::checked(m, kSymmetryTolerance);
  } catch (const DataError& e) {
    invalid(origin, where + ": " + e.what());
  }
}

void expect_size(Eigen::Index got, Eigen::Index want, const std::string& origin, const std::string& where) {
  if (got != want)
    invalid(origin, where + ": dimension " + std::to_string(got) + " does not match " + std::to_string(want));
}

ConstraintSet read_constraint(const json& j, Eigen::Index n, const std::string& origin, const std::string& where) {
  const std::string type = require(j, "type", origin, where).get<std::string>();
  if (type == "whole-space") return WholeSpace{};
  if (type == "box") {
    Vector lo = read_vector(require(j, "lower", origin, where), origin, where + ".lower");
    Vector hi = read_vector(require(j, "upper", origin, where), origin, where + ".upper");
    expect_size(lo.size(), n, origin, where + ".lower");
    expect_size(hi.size(), n, origin, where + ".upper");
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(lo(i) <= hi(i))) invalid(origin, where + ": box needs lower <= upper (coordinate " + std::to_string(i) + ")");
    return Box{std::move(lo), std::move(hi)};
  }
  if (type == "ball") {
    Vector c = read_vector(require(j, "center", origin, where), origin, where + ".center");
    expect_size(c.size(), n, origin, where + ".center");
    const double r = read_number(require(j, "radius", origin, where), origin, where + ".radius");
    if (!(r > 0)) invalid(origin, where + ": ball radius must be positive");
    return Ball{std::move(c), r};
  }
  invalid(origin, where + ": unknown constraint type '" + type + "'");
}

CompositeProblem read_composite(const json& j, const std::string& origin, const std::string& where) {
  CompositeProblem p{read_symmetric(require(j, "Q", origin, where), origin, where + ".Q"),
                     read_vector(require(j, "q", origin, where), origin, where + ".q"), WholeSpace{}};
  expect_size(p.q.size(), p.Q.size(), origin, where + ".q");
  if (j.contains("constraint")) p.K = read_constraint(j.at("constraint"), p.Q.size(), origin, where + ".constraint");
  try {
    SubdifferentialComposite check(p.Q, p.q, p.K);
  } catch (const DataError& e) {
    invalid(origin, where + ": " + e.what());
  }
  return p;
}

ProblemData read_data(const json& root, const std::string& origin) {
  const json& kind_j = require(root, "kind", origin, "problem");
  if (!kind_j.is_string()) invalid(origin, "kind: expected a string");
  const std::string kind = kind_j.get<std::string>();
  if (kind == "quadratic") {
    QuadraticProblem p{read_symmetric(require(root, "B", origin, "problem"), origin, "B"),
                       read_vector(require(root, "C", origin, "problem"), origin, "C"), std::nullopt};
    expect_size(p.C.size(), p.B.size(), origin, "C");
    if (root.contains("L")) {
      p.L = read_number(root.at("L"), origin, "L");
      if (!(*p.L > 0)) invalid(origin, "L must be positive");
    }
    return p;
  }
  if (kind == "composite") return read_composite(root, origin, "problem");
  if (kind == "dc") {
    DcProblem p{read_composite(require(root, "g", origin, "problem"), origin, "g"), SymMatrix{}, Vector{}};
    const json& h = require(root, "h", origin, "problem");
    p.P = read_symmetric(require(h, "P", origin, "h"), origin, "h.P");
    p.p = read_vector(require(h, "p", origin, "h"), origin, "h.p");
    expect_size(p.P.size(), p.g.Q.size(), origin, "h.P");
    expect_size(p.p.size(), p.g.Q.size(), origin, "h.p");
    try {
      quadratic_function(p.P, p.p);
    } catch (const DataError& e) {
      invalid(origin, std::string("h: ") + e.what());
    }
    return p;
  }
  if (kind == "sign") return SignProblem{};
  if (kind == "smooth-named") {
    SmoothNamedProblem p{require(root, "function", origin, "problem").get<std::string>(),
                         read_matrix(require(root, "A", origin, "problem"), origin, "A"),
                         read_vector(require(root, "b", origin, "problem"), origin, "b")};
    if (p.function != "least-squares" && p.function != "logistic")
      invalid(origin, "function: unknown smooth function '" + p.function + "'");
    expect_size(p.b.size(), p.A.rows(), origin, "b");
    if (p.function == "logistic")
      for (Eigen::Index i = 0; i < p.b.size(); ++i)
        if (p.b(i) != 1.0 && p.b(i) != -1.0) invalid(origin, "b: logistic labels must be -1 or 1");
    return p;
  }
  invalid(origin, "kind: unknown problem kind '" + kind + "'");
}

SolutionSetSpec read_solution_set(const json& j, Eigen::Index n, const ProblemData& data, const std::string& origin) {
  const std::string where = "metadata.solution_set";
  const std::string type = require(j, "type", origin, where).get<std::string>();
  if (type == "affine") {
    if (!std::holds_alternative<QuadraticProblem>(data)) invalid(origin, where + ": affine sets need a quadratic problem");
    return AffineSetTag{};
  }
  if (type == "finite") {
    const json& pts = require(j, "points", origin, where);
    if (!pts.is_array() || pts.empty()) invalid(origin, where + ".points: expected a non-empty array");
    FiniteSolutionSet s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      s.points.push_back(read_vector(pts[i], origin, where + ".points"));
      expect_size(s.points.back().size(), n, origin, where + ".points");
    }
    return s;
  }
  if (type == "product") {
    const json& co = require(j, "coordinates", origin, where);
    if (!co.is_array() || static_cast<Eigen::Index>(co.size()) != n)
      invalid(origin, where + ".coordinates: expected one list per coordinate");
    ProductSolutionSet s;
    for (std::size_t i = 0; i < co.size(); ++i) {
      const Vector v = read_vector(co[i], origin, where + ".coordinates");
      s.coordinates.emplace_back(v.data(), v.data() + v.size());
    }
    return s;
  }
  if (type == "box" || type == "ball") return ConvexSolutionSet{read_constraint(j, n, origin, where)};
  invalid(origin, where + ": unknown solution set type '" + type + "'");
}

ProblemMetadata read_metadata(const json& j, const ProblemData& data, const std::string& origin) {
  ProblemMetadata m;
  if (!j.is_object()) invalid(origin, "metadata: expected an object");
  const Eigen::Index n = dimension(data);
  if (j.contains("solution_set")) m.solution_set = read_solution_set(j.at("solution_set"), n, data, origin);
  if (j.contains("f_star")) m.f_star = read_number(j.at("f_star"), origin, "metadata.f_star");
  if (j.contains("modulus")) {
    const json& mj = j.at("modulus");
    ModulusSpec s;
    s.c = read_number(require(mj, "c", origin, "metadata.modulus"), origin, "metadata.modulus.c");
    if (mj.contains("alpha")) s.alpha = read_number(mj.at("alpha"), origin, "metadata.modulus.alpha");
    if (mj.contains("sigma")) s.sigma = read_number(mj.at("sigma"), origin, "metadata.modulus.sigma");
    if (mj.contains("a")) s.a = read_number(mj.at("a"), origin, "metadata.modulus.a");
    if (mj.contains("truncated")) s.truncated = mj.at("truncated").get<bool>();
    if (!(s.c >= 0) || !(s.alpha > 0) || !(s.sigma > 0) || (s.a && !(*s.a >= 0)))
      invalid(origin, "metadata.modulus: need c >= 0, alpha > 0, sigma > 0, a >= 0");
    m.modulus = s;
  }
  if (j.contains("x0")) {
    m.x0 = read_vector(j.at("x0"), origin, "metadata.x0");
    expect_size(m.x0->size(), n, origin, "metadata.x0");
  }
  if (j.contains("x_star")) {
    m.x_star = read_vector(j.at("x_star"), origin, "metadata.x_star");
    expect_size(m.x_star->size(), n, origin, "metadata.x_star");
  }
  return m;
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Vector(m.row(r).transpose())));
  return rows;
}

json to_json(const ConstraintSet& k) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, WholeSpace>) return {{"type", "whole-space"}};
        else if constexpr (std::is_same_v<T, Box>) return {{"type", "box"}, {"lower", to_json(s.lower)}, {"upper", to_json(s.upper)}};
        else return {{"type", "ball"}, {"center", to_json(s.center)}, {"radius", s.radius}};
      },
      k);
}

json to_json(const CompositeProblem& p) {
  return {{"Q", to_json(p.Q.matrix())}, {"q", to_json(p.q)}, {"constraint", to_json(p.K)}};
}

json to_json(const ProblemFile& problem) {
  json root = std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, QuadraticProblem>) {
          json j = {{"kind", "quadratic"}, {"B", to_json(d.B.matrix())}, {"C", to_json(d.C)}};
          if (d.L) j["L"] = *d.L;
          return j;
        } else if constexpr (std::is_same_v<T, CompositeProblem>) {
          json j = to_json(d);
          j["kind"] = "composite";
          return j;
        } else if constexpr (std::is_same_v<T, DcProblem>) {
          return {{"kind", "dc"}, {"g", to_json(d.g)}, {"h", {{"P", to_json(d.P.matrix())}, {"p", to_json(d.p)}}}};
        } else if constexpr (std::is_same_v<T, SignProblem>) {
          return {{"kind", "sign"}};
        } else {
          return {{"kind", "smooth-named"}, {"function", d.function}, {"A", to_json(d.A)}, {"b", to_json(d.b)}};
        }
      },
      problem.data);

  const ProblemMetadata& m = problem.metadata;
  json meta = json::object();
  if (m.solution_set) {
    meta["solution_set"] = std::visit(
        [](const auto& s) -> json {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, AffineSetTag>) return {{"type", "affine"}};
          else if constexpr (std::is_same_v<T, FiniteSolutionSet>) {
            json pts = json::array();
            for (const auto& p : s.points) pts.push_back(to_json(p));
            return {{"type", "finite"}, {"points", pts}};
          } else if constexpr (std::is_same_v<T, ProductSolutionSet>) {
            return {{"type", "product"}, {"coordinates", s.coordinates}};
          } else {
            return to_json(s.set);
          }
        },
        *m.solution_set);
  }
  if (m.f_star) meta["f_star"] = *m.f_star;
  if (m.modulus) {
    json mj = {{"c", m.modulus->c}, {"alpha", m.modulus->alpha}, {"truncated", m.modulus->truncated}};
    if (std::isfinite(m.modulus->sigma)) mj["sigma"] = m.modulus->sigma;
    if (m.modulus->a) mj["a"] = *m.modulus->a;
    meta["modulus"] = mj;
  }
  if (m.x0) meta["x0"] = to_json(*m.x0);
  if (m.x_star) meta["x_star"] = to_json(*m.x_star);
  if (!meta.empty()) root["metadata"] = meta;
  return root;
}

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Eigen::MatrixXd logistic_gram(const Eigen::MatrixXd& A) { return A.transpose() * A; }

}  // namespace

std::string kind_name(const ProblemData& data) {
  static const char* names[] = {"quadratic", "composite", "dc", "sign", "smooth-named"};
  return names[data.index()];
}

Eigen::Index dimension(const ProblemData& data) {
  return std::visit(
      [](const auto& d) -> Eigen::Index {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, QuadraticProblem>) return d.B.size();
        else if constexpr (std::is_same_v<T, CompositeProblem>) return d.Q.size();
        else if constexpr (std::is_same_v<T, DcProblem>) return d.g.Q.size();
        else if constexpr (std::is_same_v<T, SignProblem>) return 1;
        else return d.A.cols();
      },
      data);
}

ProblemFile parse_problem(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte);
    std::string msg = e.what();
    if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw DataError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
  try {
    if (!root.is_object()) invalid(origin, "expected a JSON object at top level");
    ProblemFile p{read_data(root, origin), {}};
    if (root.contains("metadata")) p.metadata = read_metadata(root.at("metadata"), p.data, origin);
    return p;
  } catch (const json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open problem file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str(), path.string());
}

std::string serialize_problem(const ProblemFile& problem) { return to_json(problem).dump(2) + "\n"; }

void write_problem(const ProblemFile& problem, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << serialize_problem(problem);
  if (!out) throw DataError(path.string() + ": write failed");
}

OperatorSpec to_operator(const ProblemFile& problem) {
  return std::visit(
      [&](const auto& d) -> OperatorSpec {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, QuadraticProblem>) return AffineSymmetric{d.B, d.C};
        else if constexpr (std::is_same_v<T, CompositeProblem>) return SubdifferentialComposite(d.Q, d.q, d.K);
        else if constexpr (std::is_same_v<T, DcProblem>)
          return DcPair{SubdifferentialComposite(d.g.Q, d.g.q, d.g.K), quadratic_function(d.P, d.p)};
        else if constexpr (std::is_same_v<T, SignProblem>) return SignOp{};
        else return to_smooth(problem);
      },
      problem.data);
}

SmoothGradient to_smooth(const ProblemFile& problem) {
  if (const auto* q = std::get_if<QuadraticProblem>(&problem.data)) {
    SmoothGradient f = quadratic_function(q->B, Vector(-q->C));
    if (q->L) f.lipschitz = *q->L;
    return f;
  }
  const auto* s = std::get_if<SmoothNamedProblem>(&problem.data);
  if (!s) throw ArgumentError("problem of kind '" + kind_name(problem.data) + "' has no smooth objective");
  const Eigen::MatrixXd A = s->A;
  const Vector b = s->b;
  SmoothGradient f;
  const double gram_norm = operator_norm(SymMatrix(logistic_gram(A)));
  if (s->function == "least-squares") {
    f.lipschitz = gram_norm;
    f.evaluate = [A, b](const Vector& x) {
      const Vector r = A * x - b;
      return Evaluation{0.5 * r.squaredNorm(), A.transpose() * r};
    };
  } else {
    f.lipschitz = gram_norm / 4.0;
    f.evaluate = [A, b](const Vector& x) {
      const Vector m = (b.array() * (A * x).array()).matrix();
      Evaluation e{0.0, Vector::Zero(x.size())};
      Vector w(m.size());
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        // log(1 + exp(-m)) and its derivative -1/(1 + exp(m)), both overflow-safe.
        e.value += m(i) > 0 ? std::log1p(std::exp(-m(i))) : -m(i) + std::log1p(std::exp(m(i)));
        w(i) = -b(i) / (1.0 + std::exp(m(i)));
      }
      e.gradient = A.transpose() * w;
      return e;
    };
  }
  return f;
}

double smooth_lipschitz(const ProblemFile& problem) { return to_smooth(problem).lipschitz; }

std::optional<SolutionSet> reference_set(const ProblemFile& problem) {
  const auto& spec = problem.metadata.solution_set;
  if (!spec) {
    if (const auto* q = std::get_if<QuadraticProblem>(&problem.data)) return AffineSolutionSet(q->B, q->C);
    return std::nullopt;
  }
  return std::visit(
      [&](const auto& s) -> SolutionSet {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AffineSetTag>) {
          const auto& q = std::get<QuadraticProblem>(problem.data);
          return AffineSolutionSet(q.B, q.C);
        } else {
          return s;
        }
      },
      *spec);
}

std::optional<RContinuityCertificate> certificate(const ProblemFile& problem) {
  const auto& m = problem.metadata.modulus;
  if (!m) {
    if (const auto* q = std::get_if<QuadraticProblem>(&problem.data)) {
      const auto ed = eigendecompose(q->B);
      if (is_positive_semidefinite(ed, norm_inf(q->B))) return affine_certificate(AffineSymmetric{q->B, q->C});
    }
    return std::nullopt;
  }
  RContinuityCertificate cert;
  cert.rho = ModulusFunction(m->c, m->alpha, ModulusOrigin::user_supplied);
  cert.sigma = m->sigma;
  cert.truncated = m->truncated;
  if (m->a) {
    cert.a = *m->a;
  } else if (const auto* q = std::get_if<QuadraticProblem>(&problem.data)) {
    cert.a = min_norm_solve(q->B, q->C).norm();
  } else if (std::holds_alternative<SignProblem>(problem.data)) {
    cert.a = 0;
  } else {
    throw DataError("metadata.modulus: field 'a' is required for problems of kind '" + kind_name(problem.data) + "'");
  }
  return cert;
}

}  // namespace monoreg
