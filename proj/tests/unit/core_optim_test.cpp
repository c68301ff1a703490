#include <gtest/gtest.h>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/optim.hpp"

#include <cmath>
#include <limits>

using namespace mgcrnn;

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterSet ps;
  Parameter& p = ps.add("w", Matrix{{1.0}});
  p.grad(0, 0) = 0.1;
  AdamState state(ps);
  adam_step(ps, state, 0.002);
  // t=1: m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps).
  const double expected = 1.0 - 0.002 * 0.1 / (0.1 + 1e-8);
  EXPECT_NEAR(p.value(0, 0), expected, 1e-15);
  EXPECT_NEAR(p.value(0, 0), 0.998, 1e-9);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ZeroGradientIsIdentity) {
  ParameterSet ps;
  Parameter& p = ps.add("w", Matrix{{1.0, -2.0}, {0.5, 3.0}});
  const Matrix before = p.value;
  AdamState state(ps);
  for (int i = 0; i < 5; ++i) adam_step(ps, state, 0.01);
  EXPECT_EQ(p.value, before);
  for (double v : state.v[0].values()) EXPECT_GE(v, 0.0);
}

TEST(Adam, DeterministicAcrossRuns) {
  auto run = []() {
    Rng rng(11);
    ParameterSet ps;
    Parameter& p = ps.add("w", glorot_uniform(4, 4, rng));
    AdamState state(ps);
    for (int it = 0; it < 20; ++it) {
      for (double& g : p.grad.values()) g = rng.normal();
      adam_step(ps, state, decayed_lr(0.002, 0.002, state.t));
    }
    return p.value;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  ParameterSet ps;
  ps.add("fine", Matrix(1, 1));
  Parameter& bad = ps.add("broken", Matrix(2, 2));
  bad.grad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState state(ps);
  try {
    adam_step(ps, state, 0.01);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
  EXPECT_EQ(state.t, 0u);
}

TEST(DecayedLr, Formula) {
  EXPECT_DOUBLE_EQ(decayed_lr(0.002, 0.002, 0), 0.002);
  EXPECT_DOUBLE_EQ(decayed_lr(0.002, 0.002, 1), 0.002 / 1.002);
  EXPECT_DOUBLE_EQ(decayed_lr(0.05, 0.0, 12345), 0.05);
  double prev = decayed_lr(0.002, 0.002, 0);
  for (std::uint64_t k = 1; k < 100; ++k) {
    const double lr = decayed_lr(0.002, 0.002, k);
    EXPECT_LT(lr, prev);
    prev = lr;
  }
}

TEST(Dropout, RateZeroAndInferenceAreIdentity) {
  Rng rng(3);
  const Matrix off = dropout_mask(3, 4, 0.0, rng);
  const Matrix inference = dropout_mask(3, 4, 0.5, rng, /*training=*/false);
  EXPECT_EQ(off, Matrix::ones(3, 4));
  EXPECT_EQ(inference, Matrix::ones(3, 4));
}

TEST(Dropout, InvertedScalingKeepsMeanNearOne) {
  Rng rng(12);
  Matrix m = dropout_mask(1000, 100, 0.2, rng);
  double mean = 0.0;
  for (double v : m.values()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.25) < 1e-15);
    mean += v;
  }
  mean /= static_cast<double>(m.size());
  EXPECT_NEAR(mean, 1.0, 0.01);
}

TEST(Dropout, RateOneIsRejected) {
  Rng rng(1);
  EXPECT_THROW(dropout_mask(2, 2, 1.0, rng), ParameterError);
}

TEST(Glorot, WithinLimit) {
  Rng rng(9);
  Matrix w = glorot_uniform(30, 20, rng);
  const double limit = std::sqrt(6.0 / 50.0);
  for (double v : w.values()) EXPECT_LE(std::abs(v), limit);
}
