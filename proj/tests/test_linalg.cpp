#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "instances.hpp"
#include "monoreg/linalg.hpp"
#include "monoreg/random.hpp"
#include "oracles.hpp"

using namespace monoreg;
using instances::example1_B;
using instances::example1_C;

namespace {

void check_decomposition_invariants(const SymMatrix& m, const EigenDecomposition<double>& ed) {
  const Eigen::Index n = m.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(std::abs(ed.vector(i).norm() - 1.0) <= 1e-12);
    for (Eigen::Index j = i + 1; j < n; ++j) CHECK(std::abs(ed.vector(i).dot(ed.vector(j))) <= 1e-10);
  }
  Eigen::MatrixXd rec = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) rec += ed.eigenvalues(i) * ed.vector(i) * ed.vector(i).transpose();
  const double err = (m.matrix() - rec).cwiseAbs().rowwise().sum().maxCoeff();
  CHECK(err <= 1e-8 * (1 + norm_inf(m)));
  for (Eigen::Index i = 1; i < n; ++i) CHECK(ed.eigenvalues(i - 1) <= ed.eigenvalues(i));
}

}  // namespace

TEST_CASE("symmetric matrix mirrors the lower triangle") {
  Eigen::MatrixXd raw(2, 2);
  raw << 1, 7, 3, 4;
  const SymMatrix m(raw);
  CHECK(m(0, 1) == 3);
  CHECK(m(1, 0) == 3);
  CHECK_THROWS_AS(SymMatrix::checked(raw, 1e-12), DataError);
  CHECK_THROWS_AS(SymMatrix(Eigen::MatrixXd(2, 3)), DataError);
}

TEST_CASE("eigendecompose: identity and diagonal") {
  const auto id = eigendecompose(SymMatrix::identity(3));
  CHECK(id.eigenvalues.isApprox(Vector::Ones(3)));
  check_decomposition_invariants(SymMatrix::identity(3), id);

  const SymMatrix d = SymMatrix::diagonal(Vector{{5.0, 0.0, 3.0}});
  const auto ed = eigendecompose(d);
  CHECK(ed.eigenvalues(0) == 0.0);
  CHECK(ed.eigenvalues(1) == 3.0);
  CHECK(ed.eigenvalues(2) == 5.0);
  CHECK(std::abs(ed.vector(0)(1)) == 1.0);
  CHECK(std::abs(ed.vector(1)(2)) == 1.0);
  CHECK(std::abs(ed.vector(2)(0)) == 1.0);
}

TEST_CASE("eigendecompose: ties keep the original index order") {
  const auto ed = eigendecompose(SymMatrix::diagonal(Vector{{2.0, 1.0, 2.0}}));
  CHECK(ed.vector(1)(0) == 1.0);
  CHECK(ed.vector(2)(2) == 1.0);
}

TEST_CASE("eigendecompose: example matrix against the characteristic polynomial") {
  // det(B - t I) = -t (t^2 - 330 t + 54); trace 330, principal 2x2 minors sum to 54.
  const SymMatrix b = example1_B();
  CHECK(b.matrix().trace() == 330.0);
  const double minors = (22.0 * 97 - 46.0 * 46) + (22.0 * 211 - 68.0 * 68) + (97.0 * 211 - 143.0 * 143);
  CHECK(minors == 54.0);
  const auto [small, big] = oracle::quadratic_roots(330.0L, 54.0L);

  const auto ed = eigendecompose(b);
  CHECK(std::abs(ed.eigenvalues(0)) <= 1e-12);
  CHECK(std::abs(ed.eigenvalues(1) - double(small)) <= 1e-10);
  CHECK(std::abs(ed.eigenvalues(2) - double(big)) <= 1e-10);
  // The quoted approximations 0.163738 and 329.836262 agree with the exact roots
  // only to about 1e-4 relative (exact: 0.1637176, 329.8362824).
  CHECK(ed.eigenvalues(1) == doctest::Approx(0.163738).epsilon(2e-4));
  CHECK(ed.eigenvalues(2) == doctest::Approx(329.836262).epsilon(1e-7));
  check_decomposition_invariants(b, ed);
}

TEST_CASE("eigendecompose: random matrices against the Sturm bisection oracle") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = rng.integer(1, 8);
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.uniform(-1, 1);
    const SymMatrix m(a);
    const auto ed = eigendecompose(m);
    const auto ref = oracle::eigenvalues_by_bisection(m.matrix());
    for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(ed.eigenvalues(i) - ref[i]) <= 1e-10 * norm_inf(m));
    check_decomposition_invariants(m, ed);
  }
}

TEST_CASE("eigendecompose: rejects a non-positive tolerance and handles the zero matrix") {
  CHECK_THROWS_AS(eigendecompose(SymMatrix::identity(2), 0.0), ArgumentError);
  const auto ed = eigendecompose(SymMatrix(Eigen::MatrixXd::Zero(3, 3)));
  CHECK(ed.eigenvalues.isZero());
  CHECK(ed.sweeps == 0);
}

TEST_CASE("eigendecompose: long double instantiation") {
  const auto ed = eigendecompose(example1_B().cast<long double>());
  const auto [small, big] = oracle::quadratic_roots(330.0L, 54.0L);
  CHECK(std::abs(static_cast<double>(ed.eigenvalues(1) - small)) <= 1e-14);
  CHECK(std::abs(static_cast<double>(ed.eigenvalues(2) - big)) <= 1e-12);
}

TEST_CASE("least_positive_eigenvalue and operator_norm") {
  CHECK(least_positive_eigenvalue(SymMatrix::diagonal(Vector{{0.0, 3.0, 5.0}}), 1e-9) == 3.0);
  CHECK(least_positive_eigenvalue(SymMatrix::identity(4)) == 1.0);
  const auto [small, big] = oracle::quadratic_roots(330.0L, 54.0L);
  CHECK(std::abs(least_positive_eigenvalue(example1_B()) - double(small)) <= 1e-10);
  CHECK_THROWS_AS(least_positive_eigenvalue(SymMatrix::diagonal(Vector{{0.0, -1.0}}), 1e-9), DataError);

  CHECK(operator_norm(SymMatrix::identity(3)) == 1.0);
  CHECK(operator_norm(SymMatrix::diagonal(Vector{{-4.0, 2.0}})) == 4.0);
  const double nb = operator_norm(example1_B());
  CHECK(std::abs(nb - double(big)) <= 1e-10);
  CHECK(nb < 330.0);
}

TEST_CASE("min_norm_solve") {
  const Vector x = min_norm_solve(example1_B(), example1_C());
  CHECK((x - Vector{{1.0, 2.0, 3.0}}).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(std::abs(x.dot(Vector{{1.0, 1.0, -1.0}})) <= 1e-9);

  const SymMatrix d = SymMatrix::diagonal(Vector{{1.0, 0.0}});
  CHECK(min_norm_solve(d, Vector{{1.0, 0.0}}).isApprox(Vector{{1.0, 0.0}}));
  CHECK_THROWS_AS(min_norm_solve(d, Vector{{0.0, 1.0}}), InconsistentSystemError);
  try {
    min_norm_solve(d, Vector{{0.0, 1.0}});
  } catch (const InconsistentSystemError& e) {
    CHECK(e.residual() == doctest::Approx(1.0));
  }
}

TEST_CASE("kernel and range projections") {
  const Vector v{{0.3, -1.2, 2.0}};
  CHECK(project_kernel(SymMatrix::identity(3), v).isZero());

  const SymMatrix b = example1_B();
  const Vector u{{1.0, 1.0, -1.0}};
  CHECK((b * u).isZero());  // direct multiplication: row3 = row1 + row2
  CHECK((project_kernel(b, u) - u).norm() <= 1e-12);
  // <(4,0,0), u/sqrt3> u/sqrt3 = (4/3) u
  CHECK((project_kernel(b, Vector{{4.0, 0.0, 0.0}}) - (4.0 / 3.0) * u).norm() <= 1e-12);
}

TEST_CASE("distance_to_affine_solution_set") {
  const SymMatrix b = example1_B();
  const Vector c = example1_C();
  const Vector xt{{1.0, 2.0, 3.0}};
  const Vector u = Vector{{1.0, 1.0, -1.0}} / std::sqrt(3.0);
  CHECK(distance_to_affine_solution_set(b, c, xt) <= 1e-12);
  for (double t : {-5.0, 0.5, 12.0}) CHECK(distance_to_affine_solution_set(b, c, Vector(xt + t * u)) <= 1e-11);

  const Vector x{{5.0, 2.0, 3.0}};
  const double grid = oracle::distance_to_line_by_grid(x, xt, u, -10, 10);
  const double d = distance_to_affine_solution_set(b, c, x);
  CHECK(d == doctest::Approx(std::sqrt(96.0) / 3.0).epsilon(1e-12));
  CHECK(std::abs(d - grid) <= 1e-9);
  CHECK(d == doctest::Approx(3.2660).epsilon(1e-4));
}

TEST_CASE("spectral lower bounds hold on sampled range vectors") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = instances::psd_instance(rng, 8);
    const SymMatrix& m = sys.B;
    const auto ed = eigendecompose(m);
    const double thr = default_zero_threshold(m);
    const double k = least_positive_eigenvalue(ed, thr);
    const double nm = operator_norm(ed);
    const SymMatrix m2(MatrixX<double>(m.matrix() * m.matrix()));
    const double k2 = least_positive_eigenvalue(m2, default_zero_threshold(m2));
    for (int s = 0; s < 100; ++s) {
      const Vector x = project_range(ed, rng.normal_vector(m.size()), thr);
      CHECK(x.dot(m * x) >= k * x.squaredNorm() * (1 - 1e-9));
      CHECK((m * x).norm() >= (k2 / nm) * x.norm() * (1 - 1e-9));
      const Vector v = rng.normal_vector(m.size());
      CHECK((project_kernel(ed, v, thr) + project_range(ed, v, thr) - v).norm() <= 1e-10 * (1 + v.norm()));
    }
    const Vector xr = min_norm_solve(m, ed, sys.C, thr);
    for (Eigen::Index i = 0; i < ed.size(); ++i)
      if (std::abs(ed.eigenvalues(i)) <= thr) CHECK(std::abs(ed.vector(i).dot(xr)) <= 1e-9 * xr.norm());
  }
}

TEST_CASE("solve_shifted") {
  const Vector x = solve_shifted(SymMatrix::diagonal(Vector{{2.0, 0.0}}), 0.1, Vector{{2.0, 0.0}});
  CHECK(x(0) == doctest::Approx(2.0 / 2.1).epsilon(1e-15));
  CHECK(x(1) == 0.0);
  CHECK_THROWS_AS(solve_shifted(SymMatrix::diagonal(Vector{{-1.0, 1.0}}), 0.5, Vector{{1.0, 1.0}}), DataError);
}
