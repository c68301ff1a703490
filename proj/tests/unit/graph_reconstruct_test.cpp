#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/graph/reconstruct.hpp"
#include "support/oracles.hpp"
#include "support/reconstruct_oracle.hpp"

using namespace mgcrnn;
using namespace mgcrnn::graph;

namespace {

Matrix duplicate_instance() {
  // Columns x1 = x2 = (1,0)ᵀ, x3 = (0,1)ᵀ.
  return Matrix{{1, 1, 0}, {0, 0, 1}};
}

std::size_t zero_count(const Matrix& w) {
  return static_cast<std::size_t>(std::count(w.values().begin(), w.values().end(), 0.0));
}

}  // namespace

TEST(FeatureLaplacian, SingleFeatureIsZero) {
  const Matrix lap = feature_laplacian(Matrix{{1.0, 4.0, 2.0}});
  ASSERT_EQ(lap.rows(), 1u);
  EXPECT_EQ(lap(0, 0), 0.0);
}

TEST(FeatureLaplacian, IdenticalRowsFormAllOnesBlock) {
  const Matrix lap = feature_laplacian(Matrix{{1, 2, 3, 5}, {1, 2, 3, 5}});
  EXPECT_DOUBLE_EQ(lap(0, 1), -1.0);
  EXPECT_DOUBLE_EQ(lap(0, 0), 1.0);
  for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(lap(a, 0) + lap(a, 1), 0.0, 1e-15);
}

TEST(FeatureLaplacian, SymmetricPositiveSemidefinite) {
  Rng rng(31);
  const Matrix x = oracle::random_matrix(6, 9, rng, 0.0, 10.0);
  const Matrix lap = feature_laplacian(x);
  EXPECT_TRUE(is_symmetric(lap, 1e-15));
  for (int probe = 0; probe < 200; ++probe) {
    const Matrix v = oracle::random_matrix(6, 1, rng);
    EXPECT_GE(matmul(transpose(v), matmul(lap, v))(0, 0), -1e-10);
  }
}

TEST(FeatureLaplacian, ZeroVarianceRowDoesNotThrow) {
  EXPECT_NO_THROW(feature_laplacian(Matrix{{2, 2, 2}, {1, 5, 3}}));
}

TEST(SparseReconstruct, LargeRho1GivesZero) {
  Rng rng(32);
  const Matrix x = oracle::random_matrix(4, 6, rng, 0.0, 1.0);
  const Matrix gram = matmul_tn(x, x);
  ReconstructOptions opt;
  opt.rho1 = 2.0 * max_abs(gram);
  opt.rho2 = 0.0;
  const auto res = sparse_reconstruct(x, feature_laplacian(x), opt);
  EXPECT_EQ(res.weights, Matrix(6, 6));
  EXPECT_TRUE(res.converged);
}

TEST(SparseReconstruct, DuplicateColumnsMatchOracle) {
  const Matrix x = duplicate_instance();
  const Matrix lap = feature_laplacian(x);
  ReconstructOptions opt;
  opt.rho1 = 0.01;
  opt.rho2 = 0.0;
  const auto res = sparse_reconstruct(x, lap, opt);
  const auto ref = oracle::projected_gradient_oracle(x, lap, 0.01, 0.0, 1e-10);
  EXPECT_GE(res.weights(0, 1), 0.9);
  EXPECT_GE(res.weights(1, 0), 0.9);
  EXPECT_NEAR(res.weights(0, 1), ref.w(0, 1), 1e-3);
  EXPECT_NEAR(res.weights(1, 0), ref.w(1, 0), 1e-3);
  // x3 is orthogonal to the others, so its column stays empty.
  EXPECT_EQ(res.weights(0, 2), 0.0);
  EXPECT_EQ(res.weights(1, 2), 0.0);
  EXPECT_NEAR(reconstruction_objective(x, lap, res.weights, 0.01, 0.0), ref.objective, 1e-3);
}

TEST(SparseReconstruct, FeasibleAndMonotoneOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    const Matrix x = oracle::random_matrix(5, 8, rng, 0.0, 1.0);
    const Matrix lap = feature_laplacian(x);
    const auto res = sparse_reconstruct(x, lap, {});
    for (std::size_t k = 1; k < res.objective.size(); ++k)
      EXPECT_LE(res.objective[k], res.objective[k - 1]) << "seed " << seed << " iterate " << k;
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_EQ(res.weights(i, i), 0.0);
      for (std::size_t j = 0; j < 8; ++j) EXPECT_GE(res.weights(i, j), 0.0);
    }
  }
}

TEST(SparseReconstruct, ObjectiveAgreesWithEntrywiseOracle) {
  Rng rng(33);
  const Matrix x = oracle::random_matrix(4, 5, rng, 0.0, 2.0);
  const Matrix lap = feature_laplacian(x);
  const Matrix w = oracle::random_matrix(5, 5, rng, 0.0, 1.0);
  EXPECT_NEAR(reconstruction_objective(x, lap, w, 0.3, 0.2),
              oracle::objective_entrywise(x, lap, w, 0.3, 0.2), 1e-10);
}

TEST(SparseReconstruct, RandomInstanceAgreesWithOracle) {
  Rng rng(34);
  const Matrix x = oracle::random_matrix(5, 6, rng, 0.0, 1.0);
  const Matrix lap = feature_laplacian(x);
  ReconstructOptions opt;
  opt.tol = 1e-12;
  opt.max_iter = 200000;
  const auto res = sparse_reconstruct(x, lap, opt);
  const auto ref = oracle::projected_gradient_oracle(x, lap, opt.rho1, opt.rho2, 1e-13);
  EXPECT_NEAR(res.objective.back(), ref.objective, 1e-6 * std::max(1.0, ref.objective));
}

TEST(SparseReconstruct, PermutationEquivariance) {
  Rng rng(35);
  const Matrix x = oracle::random_matrix(4, 6, rng, 0.0, 1.0);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  Matrix xp(4, 6);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t j = 0; j < 6; ++j) xp(a, j) = x(a, perm[j]);
  ReconstructOptions opt;
  opt.tol = 1e-12;
  opt.max_iter = 100000;
  const Matrix w = sparse_reconstruct(x, feature_laplacian(x), opt).weights;
  const Matrix wp = sparse_reconstruct(xp, feature_laplacian(xp), opt).weights;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(wp(i, j), w(perm[i], perm[j]), 1e-6);
}

TEST(SparseReconstruct, SparsityGrowsWithRho1) {
  Rng rng(36);
  const Matrix x = oracle::random_matrix(6, 10, rng, 0.0, 1.0);
  const Matrix lap = feature_laplacian(x);
  std::size_t prev = 0;
  for (double rho1 : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0, 3.0, 10.0}) {
    ReconstructOptions opt;
    opt.rho1 = rho1;
    const std::size_t zeros = zero_count(sparse_reconstruct(x, lap, opt).weights);
    EXPECT_GE(zeros, prev) << "rho1 = " << rho1;
    prev = zeros;
  }
  EXPECT_EQ(prev, 100u);
}

TEST(SparseReconstruct, DuplicateStationsGetMutuallySymmetricWeights) {
  Rng rng(37);
  Matrix x = oracle::random_matrix(5, 7, rng, 0.0, 1.0);
  for (std::size_t a = 0; a < 5; ++a) x(a, 4) = x(a, 1);
  ReconstructOptions opt;
  opt.tol = 1e-12;
  opt.max_iter = 100000;
  const Matrix w = sparse_reconstruct(x, feature_laplacian(x), opt).weights;
  EXPECT_NEAR(w(1, 4), w(4, 1), 1e-6);
  for (std::size_t k = 0; k < 7; ++k) {
    if (k == 1 || k == 4) continue;
    EXPECT_NEAR(w(k, 1), w(k, 4), 1e-6);
  }
}

TEST(SparseReconstruct, NegativeRhoIsRejected) {
  const Matrix x = duplicate_instance();
  ReconstructOptions opt;
  opt.rho1 = -1.0;
  EXPECT_THROW(sparse_reconstruct(x, feature_laplacian(x), opt), ParameterError);
}

TEST(SparseReconstruct, IterationCapReportsNonConvergence) {
  Rng rng(38);
  const Matrix x = oracle::random_matrix(5, 8, rng, 0.0, 1.0);
  ReconstructOptions opt;
  opt.max_iter = 2;
  opt.tol = 1e-15;
  const auto res = sparse_reconstruct(x, feature_laplacian(x), opt);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 2);
}
