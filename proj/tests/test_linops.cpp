#include <gtest/gtest.h>

#include <memory>
#include <random>
#include <sstream>

#include "gtd/errors.hpp"
#include "gtd/linops.hpp"
#include "oracles.hpp"

namespace {

using namespace gtd;

using oracle::blur_matrix;
using oracle::downsample_matrix;
using oracle::ix;
using oracle::mask_matrix;

struct Case {
  std::string label;
  std::shared_ptr<LinearOperator> op;
  Matrix expected;
};

std::vector<Case> operator_cases() {
  std::mt19937_64 rng(40);
  const Matrix k3 = oracle::random_matrix(3, 3, rng);
  const Matrix k2 = oracle::random_matrix(2, 4, rng);
  const MaskOperator mask = random_mask(48, 0.5, 3);
  const Matrix dense = oracle::random_matrix(20, 48, rng);
  return {
      {"identity", std::make_shared<IdentityOperator>(48), Matrix::Identity(48, 48)},
      {"mask", std::make_shared<MaskOperator>(mask), mask_matrix(48, mask.kept())},
      {"blur", std::make_shared<BlurOperator>(Shape{4, 4, 3}, k3), blur_matrix(4, 4, 3, k3)},
      {"blur_even", std::make_shared<BlurOperator>(Shape{4, 6, 2}, k2), blur_matrix(4, 6, 2, k2)},
      {"blur_gauss", std::make_shared<BlurOperator>(Shape{8, 8}, gaussian_kernel(5, 1.0)),
       blur_matrix(8, 8, 1, gaussian_kernel(5, 1.0))},
      {"downsample", std::make_shared<DownsampleOperator>(Shape{4, 4, 3}, 2), downsample_matrix(4, 4, 3, 2)},
      {"dense", std::make_shared<DenseOperator>(dense), dense},
  };
}

TEST(Linops, IdentityForward) {
  const Vector x = (Vector(5) << 1, 2, 3, 4, 5).finished();
  IdentityOperator id(5);
  EXPECT_EQ(id.forward(x), x);
  EXPECT_EQ(id.adjoint(x), x);
  EXPECT_EQ(id.gram(x), x);
}

TEST(Linops, MaskForwardSelects) {
  MaskOperator m(4, {0, 2});
  EXPECT_EQ(m.forward((Vector(4) << 9, 8, 7, 6).finished()), (Vector(2) << 9, 7).finished());
  EXPECT_EQ(m.gram((Vector(4) << 9, 8, 7, 6).finished()), (Vector(4) << 9, 0, 7, 0).finished());
  const Vector u = (Vector(2) << 1.5, -2).finished();
  EXPECT_EQ(m.forward(m.adjoint(u)), u);
  EXPECT_THROW(MaskOperator(4, {2, 2}), std::invalid_argument);
  EXPECT_THROW(MaskOperator(4, {1, 4}), std::invalid_argument);
}

TEST(Linops, DownsampleConstantImage) {
  DownsampleOperator d({4, 4, 1}, 2);
  EXPECT_EQ(d.output_shape(), (Shape{2, 2, 1}));
  EXPECT_EQ(d.forward(Vector::Constant(16, 3.0)), Vector::Constant(4, 3.0));
  EXPECT_THROW(DownsampleOperator({5, 4}, 2), std::invalid_argument);
}

TEST(Linops, BlurAdjointIsFlippedKernel) {
  std::mt19937_64 rng(41);
  const Matrix k = oracle::random_matrix(3, 5, rng);
  const Matrix flipped = k.reverse();
  const BlurOperator a({6, 7, 2}, k);
  const BlurOperator f({6, 7, 2}, flipped);
  const Matrix at = oracle::dense(a).transpose();
  const Matrix fm = oracle::dense(f);
  EXPECT_LE((at - fm).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Linops, GaussianKernelIsNormalized) {
  const Matrix k = gaussian_kernel(5, 1.3);
  EXPECT_NEAR(k.sum(), 1.0, 1e-15);
  EXPECT_NEAR((k - k.transpose()).norm(), 0.0, 1e-15);
  EXPECT_EQ(k(2, 2), k.maxCoeff());
}

TEST(Linops, DenseGramMatchesExplicitProduct) {
  std::mt19937_64 rng(42);
  const Matrix a = oracle::random_matrix(6, 4, rng);
  const Vector x = oracle::random_vector(4, rng);
  DenseOperator op(a);
  EXPECT_LE((op.gram(x) - a.transpose() * (a * x)).norm(), 1e-13);
}

TEST(Linops, MatchesExplicitMatrices) {
  for (const auto& c : operator_cases()) {
    const Matrix m = materialize(*c.op);
    ASSERT_EQ(m.rows(), c.expected.rows()) << c.label;
    ASSERT_EQ(m.cols(), c.expected.cols()) << c.label;
    EXPECT_LE((m - c.expected).cwiseAbs().maxCoeff(), 1e-12) << c.label;
    const Matrix mt = oracle::dense(*c.op);
    EXPECT_LE((m - mt).cwiseAbs().maxCoeff(), 1e-12) << c.label;
    // Adjoint against the explicit transpose, column by column.
    for (Eigen::Index r = 0; r < c.expected.rows(); ++r) {
      Vector e = Vector::Zero(c.expected.rows());
      e[r] = 1.0;
      EXPECT_LE((c.op->adjoint(e) - c.expected.row(r).transpose()).cwiseAbs().maxCoeff(), 1e-12) << c.label;
    }
  }
}

TEST(Linops, AdjointIdentityRandomized) {
  std::mt19937_64 rng(43);
  for (const auto& c : operator_cases()) {
    for (int t = 0; t < 100; ++t) {
      const Vector x = oracle::random_vector(ix(c.op->in_dim()), rng);
      const Vector u = oracle::random_vector(ix(c.op->out_dim()), rng);
      const double lhs = c.op->forward(x).dot(u);
      const double rhs = x.dot(c.op->adjoint(u));
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs))) << c.label;
    }
  }
}

TEST(Linops, LengthChecks) {
  IdentityOperator id(3);
  EXPECT_THROW(id.forward(Vector::Zero(4)), std::invalid_argument);
  EXPECT_THROW(id.adjoint(Vector::Zero(2)), std::invalid_argument);
}

TEST(Linops, SpectralBoundIdentity) {
  const SpectralBound b = max_eigenvalue(IdentityOperator(10));
  EXPECT_NEAR(b.rayleigh, 1.0, 1e-12);
  EXPECT_NEAR(b.lambda, 1.01, 1e-6);
  EXPECT_TRUE(b.converged);
}

TEST(Linops, SpectralBoundDiagonal) {
  const Matrix d = Vector((Vector(3) << 1, 2, 3).finished()).asDiagonal();
  const SpectralBound b = max_eigenvalue(DenseOperator(d));
  EXPECT_NEAR(b.rayleigh, 9.0, 1e-6);
  EXPECT_NEAR(b.lambda, 9.09, 1e-4);
  EXPECT_TRUE(b.converged);
}

TEST(Linops, SpectralBoundMaskIsOne) {
  const MaskOperator m = random_mask(40, 0.5, 7);
  const SpectralBound b = max_eigenvalue(m);
  EXPECT_NEAR(b.rayleigh, oracle::max_gram_eigenvalue(oracle::dense(m)), 1e-9);
  EXPECT_NEAR(b.rayleigh, 1.0, 1e-9);
}

TEST(Linops, SpectralBoundZeroOperator) {
  const SpectralBound b = max_eigenvalue(DenseOperator(Matrix::Zero(3, 4)));
  EXPECT_EQ(b.lambda, kSpectralFloor);
  EXPECT_FALSE(b.converged);
}

TEST(Linops, SpectralBoundDominatesDenseEigenvalue) {
  for (const auto& c : operator_cases()) {
    const double top = oracle::max_gram_eigenvalue(c.expected);
    const SpectralBound b = max_eigenvalue(*c.op);
    EXPECT_GE(b.lambda, top) << c.label;
    EXPECT_LE(b.lambda, 1.01 * top * (1.0 + 1e-6)) << c.label;
  }
}

TEST(Linops, MajorizationInequality) {
  std::mt19937_64 rng(44);
  for (const auto& c : operator_cases()) {
    const double lambda = max_eigenvalue(*c.op).lambda;
    for (int t = 0; t < 100; ++t) {
      const Vector d = oracle::random_vector(ix(c.op->in_dim()), rng) - oracle::random_vector(ix(c.op->in_dim()), rng);
      EXPECT_GE(lambda * d.squaredNorm() - c.op->forward(d).squaredNorm(), -1e-10) << c.label;
    }
  }
}

TEST(Linops, RandomMaskCountAndDeterminism) {
  const MaskOperator m = random_mask(100, 0.5, 9);
  EXPECT_EQ(m.out_dim(), 50u);
  EXPECT_TRUE(std::is_sorted(m.kept().begin(), m.kept().end()));
  EXPECT_EQ(random_mask(100, 0.5, 9).kept(), m.kept());
  EXPECT_NE(random_mask(100, 0.5, 10).kept(), m.kept());
  EXPECT_EQ(random_mask(7, 0.3, 1).out_dim(), 2u);
  EXPECT_THROW(random_mask(10, 1.5, 0), std::invalid_argument);
}

TEST(Linops, FileFormatsRoundTrip) {
  std::mt19937_64 rng(45);
  const Matrix a = oracle::random_matrix(3, 5, rng);
  std::stringstream ss;
  write_dense_operator(ss, a);
  EXPECT_EQ(read_dense_operator(ss).matrix(), a);

  const MaskOperator m = random_mask(20, 0.4, 2);
  std::stringstream ms;
  write_mask(ms, m);
  EXPECT_EQ(read_mask(ms, 20).kept(), m.kept());

  const Matrix k = gaussian_kernel(3, 0.8);
  std::stringstream ks;
  write_kernel(ks, k);
  EXPECT_EQ(read_kernel(ks), k);

  std::istringstream bad("2 2\n1 2 3\n");
  EXPECT_THROW(read_dense_operator(bad), FormatError);
}

}  // namespace
