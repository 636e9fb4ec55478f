#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "instances.hpp"
#include "monoreg/tikhonov.hpp"
#include "oracles.hpp"

using namespace monoreg;

namespace {

const double kSmall = double(oracle::quadratic_roots(330.0L, 54.0L).first);

RContinuityCertificate lipschitz_cert(double c, double a, double sigma = std::numeric_limits<double>::infinity()) {
  RContinuityCertificate cert;
  cert.rho = ModulusFunction(c, 1.0, ModulusOrigin::user_supplied);
  cert.a = a;
  cert.sigma = sigma;
  return cert;
}

AffineSymmetric example1() { return {instances::example1_B(), instances::example1_C()}; }

}  // namespace

TEST_CASE("tikhonov_solve examples") {
  const Vector x = tikhonov_solve(example1(), 1e-5);
  const Vector shift = (x - Vector{{1.0, 2.0, 3.0}}) / 1e-5;
  CHECK(shift(0) == doctest::Approx(-0.2218).epsilon(3e-3));
  CHECK(shift(1) == doctest::Approx(0.167).epsilon(3e-3));
  CHECK(shift(2) == doctest::Approx(-0.0557).epsilon(3e-3));
  // Residual of (B + eps I) x = C in extended precision.
  const Eigen::Matrix<long double, -1, 1> xl = x.cast<long double>();
  const Eigen::Matrix<long double, -1, -1> Bl = instances::example1_B().matrix().cast<long double>();
  const Eigen::Matrix<long double, -1, 1> Cl = instances::example1_C().cast<long double>();
  const long double r = (Bl * xl + 1e-5L * xl - Cl).norm();
  CHECK(static_cast<double>(r) <= 1e-10);

  CHECK(tikhonov_solve(AffineSymmetric{SymMatrix::identity(3), Vector::Zero(3)}, 0.3).isZero());
  const Vector d = tikhonov_solve(AffineSymmetric{SymMatrix::diagonal(Vector{{2.0, 0.0}}), Vector{{2.0, 0.0}}}, 0.1);
  CHECK(d(0) == doctest::Approx(2.0 / 2.1).epsilon(1e-15));
  CHECK(d(1) == 0.0);

  CHECK_THROWS_AS(tikhonov_solve(example1(), 0.0), ArgumentError);
  CHECK_THROWS_AS(tikhonov_solve(example1(), -1.0), ArgumentError);
}

TEST_CASE("tikhonov_solve on a composite operator") {
  // g = 1/2 (x1 - x2)^2 over the box [1, 2]^2. x_eps minimizes g + eps/2 |x|^2,
  // which for small eps lies on the diagonal at (1, 1).
  Eigen::MatrixXd q(2, 2);
  q << 1, -1, -1, 1;
  const SubdifferentialComposite g(SymMatrix(q), Vector::Zero(2), make_box(Vector::Constant(2, 1), Vector::Constant(2, 2)));
  const Vector x = tikhonov_solve(g, 1e-3);
  CHECK((x - Vector::Ones(2)).norm() <= 1e-8);
  const auto ln = least_norm_solution(g);
  CHECK(ln.approximate);
  CHECK((ln.x - Vector::Ones(2)).norm() <= 1e-8);
}

TEST_CASE("least_norm_solution examples") {
  const auto ex = least_norm_solution(example1());
  CHECK_FALSE(ex.approximate);
  CHECK((ex.x - Vector{{1.0, 2.0, 3.0}}).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(least_norm_solution(AffineSymmetric{SymMatrix::identity(2), Vector::Zero(2)}).x.isZero());
  const auto sep = least_norm_solution(AffineSymmetric{SymMatrix::diagonal(Vector{{0.0, 1.0}}), Vector{{0.0, 2.0}}});
  CHECK(sep.x(0) == 0.0);
  CHECK(sep.x(1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(least_norm_solution(AffineSymmetric{SymMatrix::diagonal(Vector{{1.0, 0.0}}), Vector{{0.0, 1.0}}}),
                  InconsistentSystemError);
}

TEST_CASE("distance and rate bounds") {
  const auto b = path_distance_bounds(lipschitz_cert(1.0, 1.0), 0.1);
  CHECK(b.distance == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(b.rate == doctest::Approx(0.1 + std::sqrt(0.21)).epsilon(1e-15));
  CHECK(b.rate == doctest::Approx(0.558258).epsilon(1e-6));

  for (double eps : {1.0, 1e-3, 1e-9}) {
    const auto z = path_distance_bounds(lipschitz_cert(5.0, 0.0, 2.0), eps);
    CHECK(z.distance == 0.0);
    CHECK(z.rate == 0.0);
    CHECK(objective_gap_bound(lipschitz_cert(5.0, 0.0, 2.0), eps) == 0.0);
  }

  const auto cert = affine_certificate(example1());
  CHECK(cert.a == doctest::Approx(std::sqrt(14.0)).epsilon(1e-12));
  const auto e1 = path_distance_bounds(cert, 1e-5);
  CHECK(std::abs(e1.distance - 1e-5 * std::sqrt(14.0) / kSmall) <= 1e-12 * e1.distance);
  CHECK(e1.distance == doctest::Approx(2.285e-4).epsilon(1e-3));
  const Vector x = tikhonov_solve(example1(), 1e-5);
  const double measured = (x - Vector{{1.0, 2.0, 3.0}}).norm();
  CHECK(measured == doctest::Approx(2.83e-6).epsilon(2e-3));
  CHECK(measured <= e1.rate);
}

TEST_CASE("validity of the smallness condition") {
  const auto cert = lipschitz_cert(1.0, 2.0, 1.0);
  CHECK(within_validity(cert, 0.5));
  CHECK_FALSE(within_validity(cert, 0.6));
  CHECK_THROWS_AS(path_distance_bounds(cert, 0.6), ArgumentError);
  CHECK_THROWS_AS(objective_gap_bound(cert, 0.6), ArgumentError);
  const auto zero_a = lipschitz_cert(1.0, 0.0, 1.0);
  CHECK(within_validity(zero_a, 1.0));
  CHECK_FALSE(within_validity(zero_a, 1.5));
}

TEST_CASE("objective gap bound") {
  CHECK(objective_gap_bound(lipschitz_cert(1.0, 1.0), 0.1) == doctest::Approx(0.01).epsilon(1e-15));
  const auto cert = affine_certificate(example1());
  const double g = objective_gap_bound(cert, 1e-5);
  CHECK(std::abs(g - 14e-10 / kSmall) <= 1e-12 * g);
  CHECK(g == doctest::Approx(8.551e-9).epsilon(1e-3));
  const Vector x = tikhonov_solve(example1(), 1e-5);
  const double measured = quadratic_gap(instances::example1_B(), instances::example1_C(), x, Vector{{1.0, 2.0, 3.0}});
  CHECK(measured > 0);
  CHECK(measured <= g);
}

TEST_CASE("Lipschitz closed forms") {
  const auto b = lipschitz_path_bounds(1.0, 1.0, 0.01);
  CHECK(b.iterate == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(b.least_norm == doctest::Approx(0.01 + std::sqrt(0.0001 + 0.02)).epsilon(1e-15));
  CHECK(b.least_norm == doctest::Approx(0.151774).epsilon(1e-6));
  CHECK(b.gap == doctest::Approx(0.0001).epsilon(1e-15));
  const auto z = lipschitz_path_bounds(0.0, 3.0, 0.5);
  CHECK(z.iterate == 0.0);
  CHECK(z.least_norm == 0.0);
  CHECK(z.gap == 0.0);

  const auto cert = affine_certificate(example1());
  const auto e = lipschitz_path_bounds(cert.rho.c, cert.a, 1e-5);
  const double g = objective_gap_bound(cert, 1e-5);
  CHECK(std::abs(e.gap - g) <= 1e-12 * g);
  const auto d = path_distance_bounds(cert, 1e-5);
  CHECK(std::abs(e.iterate - d.distance) <= 1e-12 * d.distance);
  CHECK(std::abs(e.least_norm - d.rate) <= 1e-12 * d.rate);
}

TEST_CASE("quadratic_gap agrees with an extended precision difference") {
  SplitMix64 rng(41);
  for (int i = 0; i < 20; ++i) {
    const auto sys = instances::psd_instance(rng, 6);
    const Vector x = rng.normal_vector(sys.B.size()), ref = rng.normal_vector(sys.B.size());
    auto f = [&](const Vector& v) {
      const Eigen::Matrix<long double, -1, 1> vl = v.cast<long double>();
      return 0.5L * vl.dot(sys.B.matrix().cast<long double>() * vl) - sys.C.cast<long double>().dot(vl);
    };
    const long double want = f(x) - f(ref);
    CHECK(std::abs(quadratic_gap(sys.B, sys.C, x, ref) - double(want)) <= 1e-9 * (1 + std::abs(double(want))));
  }
}

TEST_CASE("geometric schedule") {
  const auto s = geometric_schedule();
  REQUIRE(s.size() == 8);
  CHECK(s.front() == 1.0);
  CHECK(s.back() == doctest::Approx(1e-7).epsilon(1e-15));
  const auto t = geometric_schedule(0.5, 3);
  CHECK(t[2] == doctest::Approx(0.005).epsilon(1e-15));
}

TEST_CASE("tikhonov_path on Example 1") {
  PathOptions opts;
  opts.cert = affine_certificate(example1());
  const PathReport r = tikhonov_path(example1(), {1e-1, 1e-3, 1e-5}, opts);
  REQUIRE(r.points.size() == 3);
  CHECK(r.ok());
  CHECK(r.monotonicity_ok);
  CHECK(r.x_tilde_exact);
  for (const auto& p : r.points) {
    REQUIRE(p.dist_to_S);
    REQUIRE(p.dist_bound);
    CHECK(*p.dist_to_S <= *p.dist_bound);
    CHECK(*p.distance_to_least_norm <= *p.rate_bound);
    CHECK(*p.measured_gap <= *p.gap_bound);
    CHECK(*p.residual <= 1e-9 * (1 + instances::example1_C().norm()));
  }
}

TEST_CASE("tikhonov_path edge cases") {
  const AffineSymmetric id{SymMatrix::identity(3), Vector::Zero(3)};
  PathOptions opts;
  opts.cert = affine_certificate(id);
  const PathReport r = tikhonov_path(id, geometric_schedule(), opts);
  CHECK(r.ok());
  for (const auto& p : r.points) {
    CHECK(p.x_eps.isZero());
    CHECK(*p.dist_bound == 0.0);
    CHECK(*p.rate_bound == 0.0);
  }
  CHECK_THROWS_AS(tikhonov_path(id, {1e-1, 1e-1}), ArgumentError);
  CHECK_THROWS_AS(tikhonov_path(id, {1e-3, 1e-1}), ArgumentError);
  CHECK_THROWS_AS(tikhonov_path(id, {}), ArgumentError);
  CHECK_THROWS_AS(tikhonov_path(id, {1.0, -1.0}), ArgumentError);

  const PathReport sign = tikhonov_path(SignOp{}, {1.0, 0.1});
  CHECK(sign.ok());
  CHECK(sign.points[1].x_eps(0) == 0.0);
}

TEST_CASE("path invariants on random PSD instances") {
  SplitMix64 rng(43);
  for (int i = 0; i < 15; ++i) {
    const auto sys = instances::psd_instance(rng, 8);
    const AffineSymmetric op{sys.B, sys.C};
    PathOptions opts;
    opts.cert = affine_certificate(op);
    const PathReport r = tikhonov_path(op, geometric_schedule(), opts);
    CHECK(r.ok());
    for (std::size_t j = 1; j < r.points.size(); ++j)
      CHECK(r.points[j - 1].norm_x_eps <= r.points[j].norm_x_eps + 1e-10);
    for (const auto& p : r.points) CHECK(p.norm_x_eps <= r.x_tilde->norm() * (1 + 1e-9));
  }
}

TEST_CASE("path on a composite operator with a supplied reference") {
  // g = 1/2 x^2 - 2x over [-1, 1] has S = {1} and f* = -1.5.
  const SubdifferentialComposite g(SymMatrix::identity(1), Vector::Constant(1, -2.0),
                                   make_box(Vector::Constant(1, -1), Vector::Constant(1, 1)));
  PathOptions opts;
  opts.reference = FiniteSolutionSet{{Vector::Constant(1, 1.0)}};
  opts.f_star = -1.5;
  const PathReport r = tikhonov_path(g, {1.0, 0.1, 0.01}, opts);
  CHECK(r.ok());
  for (const auto& p : r.points) {
    CHECK(p.x_eps(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(*p.dist_to_S <= 1e-9);
    CHECK(std::abs(*p.measured_gap) <= 1e-9);
  }
}
