#include <gtest/gtest.h>

#include <cmath>

#include "bandcone/error.hpp"
#include "bandcone/glm.hpp"
#include "bandcone/io.hpp"
#include "bandcone/linalg.hpp"
#include "support.hpp"

using namespace bandcone;

namespace {

double rel_diff(const Matrix& a, const Matrix& b) {
  return max_abs_diff(a, b) / std::max(1.0, b.max_abs());
}

}  // namespace

TEST(SymSqrt, IdentityAndDiagonal) {
  EXPECT_LE(max_abs_diff(sym_sqrt(SpdMatrix(Matrix::identity(3))).matrix(), Matrix::identity(3)),
            1e-15);
  const SpdMatrix r = sym_sqrt(SpdMatrix({{4.0, 0.0}, {0.0, 9.0}}));
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(SymSqrt, PrintedDoseResponseMatrix) {
  // The printed root was taken before rounding, so start from the refit.
  const auto ex = testkit::published().at("example_9aa");
  const SpdMatrix b =
      sym_sqrt(fit_logistic(parse_dataset(testkit::data_path("lavelle_9aa.csv"))).fisher_inv);
  const Matrix expected = testkit::matrix_of(ex.at("sqrt_fisher_inv"));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(b(i, j), expected(i, j), 5e-4);
}

TEST(SymSqrt, SquaresBackOnRandomSpd) {
  testkit::Gen gen(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(2, 6));
    const SpdMatrix m = gen.spd(n, gen.uniform(0.01, 2.0));
    const SpdMatrix r = sym_sqrt(m);
    EXPECT_EQ(r.matrix(), r.matrix().transpose());
    EXPECT_LE(rel_diff(r.matrix() * r.matrix(), m.matrix()), 1e-10) << "trial " << trial;
  }
}

TEST(SpdInvert, Examples) {
  EXPECT_LE(max_abs_diff(spd_invert(SpdMatrix(Matrix::identity(4))).matrix(), Matrix::identity(4)),
            1e-15);
  const SpdMatrix inv = spd_invert(SpdMatrix({{2.0, 0.0}, {0.0, 4.0}}));
  EXPECT_DOUBLE_EQ(inv(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(inv(1, 1), 0.25);
}

TEST(SpdInvert, ProductIsIdentityOnRandomSpd) {
  testkit::Gen gen(202);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(2, 6));
    const SpdMatrix m = gen.spd(n);
    EXPECT_LE(max_abs_diff(m.matrix() * spd_invert(m).matrix(), Matrix::identity(n)), 1e-9);
  }
}

TEST(SpdMatrix, RejectsAsymmetric) {
  EXPECT_THROW(SpdMatrix({{1.0, 0.2}, {0.3, 1.0}}), ValidationError);
  EXPECT_THROW(SpdMatrix(Matrix(2, 3)), ValidationError);
}

TEST(SpdMatrix, RejectsIndefiniteWithCondition) {
  try {
    SpdMatrix({{1.0, 2.0}, {2.0, 1.0}});
    FAIL() << "expected DecompositionError";
  } catch (const DecompositionError& e) {
    EXPECT_TRUE(std::isinf(e.condition()));
  }
  try {
    SpdMatrix({{1.0, 0.0}, {0.0, 1e-14}});
    FAIL() << "expected DecompositionError";
  } catch (const DecompositionError& e) {
    EXPECT_NEAR(e.condition(), 1e14, 1e2);
  }
}

TEST(SpdMatrix, SymmetrisesWithinTolerance) {
  const SpdMatrix m({{2.0, 0.5 + 1e-14}, {0.5, 1.0}});
  EXPECT_EQ(m(0, 1), m(1, 0));
}

TEST(JacobiEigen, MatchesClosedForm2x2) {
  testkit::Gen gen(303);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = gen.uniform(-3, 3), b = gen.uniform(-3, 3), d = gen.uniform(-3, 3);
    const auto e = jacobi_eigen(Matrix{{a, b}, {b, d}});
    const double mid = 0.5 * (a + d), rad = std::hypot(0.5 * (a - d), b);
    EXPECT_NEAR(e.values[0], mid - rad, 1e-12);
    EXPECT_NEAR(e.values[1], mid + rad, 1e-12);
  }
}

TEST(JacobiEigen, ReconstructsRandomSymmetric) {
  testkit::Gen gen(404);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(2, 8));
    const Matrix a = gen.matrix(n, n);
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) s(i, j) = a(i, j) + a(j, i);
    const auto e = jacobi_eigen(s);
    const Matrix recon = e.vectors * Matrix::diagonal(e.values) * e.vectors.transpose();
    EXPECT_LE(rel_diff(recon, s), 1e-12);
    EXPECT_LE(max_abs_diff(e.vectors.transpose() * e.vectors, Matrix::identity(n)), 1e-12);
    for (std::size_t k = 1; k < n; ++k) EXPECT_LE(e.values[k - 1], e.values[k]);
  }
}

TEST(Cholesky, SolvesRandomSystems) {
  testkit::Gen gen(505);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 6));
    const SpdMatrix m = gen.spd(n);
    const Vector x = gen.vector(n);
    const Vector b = m.matrix() * x;
    const Vector sol = cholesky_solve(cholesky(m.matrix()), b);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(sol[i], x[i], 1e-9);
  }
  EXPECT_THROW(cholesky(Matrix{{1.0, 2.0}, {2.0, 1.0}}), DecompositionError);
}

TEST(Nnls, RecoversNonNegativeSolution) {
  const Matrix a{{1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}, {1.0, 1.0, 0.0}};
  const Vector x{0.25, 0.0, 0.5};
  const Vector sol = nnls(a, a * x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(sol[i], x[i], 1e-12);
}

TEST(Nnls, ClampsNegativeDirection) {
  // Unconstrained least squares would want x = -1.
  const Matrix a{{1.0}, {1.0}};
  const Vector sol = nnls(a, Vector{-1.0, -1.0});
  EXPECT_EQ(sol[0], 0.0);
}

TEST(Matrix, BasicAlgebra) {
  const Matrix a{{1.0, 2.0}, {3.0, 4.0}};
  const Vector v = a * Vector{1.0, -1.0};
  EXPECT_EQ(v, (Vector{-1.0, -1.0}));
  EXPECT_EQ(a.transpose()(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(bilinear(Vector{1.0, 1.0}, a, Vector{1.0, 0.0}), 4.0);
  EXPECT_THROW(a * Vector{1.0}, ValidationError);
  EXPECT_THROW(dot(Vector{1.0}, Vector{1.0, 2.0}), ValidationError);
}
