#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/model/seq_model.hpp"
#include "support/model_fixtures.hpp"

using namespace mgcrnn;
using oracle::random_matrix;

namespace {

struct CellFixture {
  ParameterSet ps;
  Rng rng{71};
  LstmCell cell;
  CellFixture(std::size_t d, std::size_t h) : cell("cell", d, h, ps, rng) {}
  void zero() {
    for (auto& p : ps) p.value.fill(0.0);
  }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gate equations written out per scalar entry.
std::pair<Matrix, Matrix> lstm_oracle(const Matrix& x, const Matrix& h, const Matrix& c, const ParameterSet& ps,
                                      std::size_t hidden) {
  const Matrix& wk = ps.at("cell.kernel").value;
  const Matrix& wr = ps.at("cell.recurrent").value;
  const Matrix& b = ps.at("cell.bias").value;
  Matrix h2(x.rows(), hidden), c2(x.rows(), hidden);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < hidden; ++j) {
      double z[4];
      for (std::size_t g = 0; g < 4; ++g) {
        const std::size_t col = g * hidden + j;
        double s = b(0, col);
        for (std::size_t k = 0; k < x.cols(); ++k) s += x(r, k) * wk(k, col);
        for (std::size_t k = 0; k < hidden; ++k) s += h(r, k) * wr(k, col);
        z[g] = s;
      }
      c2(r, j) = sigmoid(z[1]) * c(r, j) + sigmoid(z[0]) * std::tanh(z[2]);
      h2(r, j) = sigmoid(z[3]) * std::tanh(c2(r, j));
    }
  return {h2, c2};
}

}  // namespace

TEST(LstmStep, AllZeroGivesZero) {
  CellFixture f(3, 4);
  f.zero();
  Tape t;
  const auto s = lstm_step(t, f.cell.bind(t, f.ps), 4, t.constant(Matrix(2, 3)),
                           {t.constant(Matrix(2, 4)), t.constant(Matrix(2, 4))});
  EXPECT_EQ(t.value(s.h), Matrix(2, 4));
  EXPECT_EQ(t.value(s.c), Matrix(2, 4));
}

TEST(LstmStep, ZeroParamsHalveCell) {
  CellFixture f(3, 2);
  f.zero();
  Tape t;
  const Matrix c0{{1.0, -2.0}};
  const auto s = lstm_step(t, f.cell.bind(t, f.ps), 2, t.constant(Matrix(1, 3, 0.7)),
                           {t.constant(Matrix(1, 2, 0.3)), t.constant(c0)});
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_DOUBLE_EQ(t.value(s.c)(0, j), 0.5 * c0(0, j));
    EXPECT_DOUBLE_EQ(t.value(s.h)(0, j), 0.5 * std::tanh(0.5 * c0(0, j)));
  }
}

TEST(LstmStep, MatchesScalarGateOracle) {
  CellFixture f(3, 4);
  Rng rng(72);
  const Matrix x = random_matrix(2, 3, rng), h = random_matrix(2, 4, rng), c = random_matrix(2, 4, rng);
  Tape t;
  const auto s = lstm_step(t, f.cell.bind(t, f.ps), 4, t.constant(x), {t.constant(h), t.constant(c)});
  const auto [h2, c2] = lstm_oracle(x, h, c, f.ps, 4);
  EXPECT_LT(oracle::max_abs_diff(t.value(s.h), h2), 1e-14);
  EXPECT_LT(oracle::max_abs_diff(t.value(s.c), c2), 1e-14);
}

TEST(LstmStep, ForgetBiasStartsAtOne) {
  CellFixture f(2, 3);
  const Matrix& b = f.ps.at("cell.bias").value;
  for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(b(0, j), (j >= 3 && j < 6) ? 1.0 : 0.0);
}

TEST(LstmStep, ThreeStepUnrollGradientMatchesFiniteDifferences) {
  CellFixture f(3, 4);
  Rng rng(73);
  std::vector<Matrix> xs;
  for (int k = 0; k < 3; ++k) xs.push_back(random_matrix(2, 3, rng));
  const Matrix in_mask = dropout_mask(2, 3, 0.3, rng), rec_mask = dropout_mask(2, 4, 0.3, rng);
  const Matrix readout = random_matrix(2, 4, rng);
  auto build = [&](Tape& t) {
    const auto cv = f.cell.bind(t, f.ps);
    LstmState s{t.constant(Matrix(2, 4)), t.constant(Matrix(2, 4))};
    for (const auto& x : xs) s = lstm_step(t, cv, 4, t.constant(x), s, in_mask, rec_mask);
    return t.sum(t.hadamard(s.h, t.constant(readout)));
  };
  auto loss = [&]() {
    Tape t;
    return t.value(build(t))(0, 0);
  };
  f.ps.zero_grad();
  Tape t;
  t.backward(build(t));
  for (auto& p : f.ps) EXPECT_LT(oracle::relative_error(p.grad, oracle::numeric_gradient(p, loss)), 1e-4) << p.name;
}

TEST(Encode, SingleStepEqualsOneLstmStep) {
  CellFixture f(3, 4);
  Rng rng(74);
  const Matrix x = random_matrix(2, 3, rng);
  Tape t;
  const auto cv = f.cell.bind(t, f.ps);
  const Var xv = t.constant(x);
  const auto enc = encode(t, cv, 4, std::span<const Var>(&xv, 1));
  const auto [h2, c2] = lstm_oracle(x, Matrix(2, 4), Matrix(2, 4), f.ps, 4);
  EXPECT_LT(oracle::max_abs_diff(t.value(enc.h), h2), 1e-14);
  EXPECT_LT(oracle::max_abs_diff(t.value(enc.c), c2), 1e-14);
}

TEST(Encode, OrderSensitiveAndDeterministic) {
  CellFixture f(3, 4);
  Rng rng(75);
  const Matrix a = random_matrix(1, 3, rng), b = random_matrix(1, 3, rng);
  auto run = [&](const Matrix& first, const Matrix& second) {
    Tape t;
    const auto cv = f.cell.bind(t, f.ps);
    std::vector<Var> xs{t.constant(first), t.constant(second)};
    return t.value(encode(t, cv, 4, xs).h);
  };
  EXPECT_EQ(run(a, b), run(a, b));
  EXPECT_GT(oracle::max_abs_diff(run(a, b), run(b, a)), 1e-6);
}

TEST(Encode, EmptySequenceIsContractError) {
  CellFixture f(3, 4);
  Tape t;
  EXPECT_THROW(encode(t, f.cell.bind(t, f.ps), 4, {}), ContractError);
}

TEST(Decode, TwoStepsMatchManualUnroll) {
  CellFixture f(4, 4);
  Rng rng(76);
  const Matrix h0 = random_matrix(2, 4, rng), c0 = random_matrix(2, 4, rng);
  Tape t;
  const auto out = decode(t, f.cell.bind(t, f.ps), 4, {t.constant(h0), t.constant(c0)}, 2);
  ASSERT_EQ(out.size(), 2u);
  const auto [h1, c1] = lstm_oracle(h0, h0, c0, f.ps, 4);
  const auto [h2, c2] = lstm_oracle(h0, h1, c1, f.ps, 4);
  EXPECT_LT(oracle::max_abs_diff(t.value(out[0]), h1), 1e-14);
  EXPECT_LT(oracle::max_abs_diff(t.value(out[1]), h2), 1e-14);
}

TEST(Decode, SingleStepHorizon) {
  CellFixture f(4, 4);
  Tape t;
  EXPECT_EQ(decode(t, f.cell.bind(t, f.ps), 4, {t.constant(Matrix(1, 4)), t.constant(Matrix(1, 4))}, 1).size(), 1u);
}

namespace {

struct DenseFixture {
  Matrix wi, bi, wo, bo;
};

Matrix run_tdo(const DenseFixture& d, const std::vector<Matrix>& hs) {
  Tape t;
  std::vector<Var> vs;
  for (const auto& h : hs) vs.push_back(t.constant(h));
  return t.value(time_distributed_output(t, {t.constant(d.wi), t.constant(d.bi)},
                                         {t.constant(d.wo), t.constant(d.bo)}, vs));
}

}  // namespace

TEST(TimeDistributedOutput, EqualHiddensGiveEqualOutputs) {
  Rng rng(77);
  const DenseFixture d{random_matrix(4, 4, rng), random_matrix(1, 4, rng), random_matrix(4, 6, rng),
                       random_matrix(1, 6, rng)};
  const Matrix h = random_matrix(1, 4, rng);
  const Matrix out = run_tdo(d, {h, random_matrix(1, 4, rng), h});
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(out(0, j), out(2, j));
}

TEST(TimeDistributedOutput, ZeroHiddenZeroBias) {
  Rng rng(78);
  const DenseFixture d{random_matrix(4, 4, rng), Matrix(1, 4), random_matrix(4, 6, rng), Matrix(1, 6)};
  EXPECT_EQ(run_tdo(d, {Matrix(1, 4)}), Matrix(1, 6));
}

TEST(TimeDistributedOutput, MatchesAffineComposition) {
  Rng rng(79);
  const DenseFixture d{random_matrix(4, 4, rng), random_matrix(1, 4, rng), random_matrix(4, 6, rng),
                       random_matrix(1, 6, rng)};
  const Matrix h = random_matrix(1, 4, rng);
  Matrix mid(1, 4), expect(1, 6);
  for (std::size_t j = 0; j < 4; ++j) {
    double s = d.bi(0, j);
    for (std::size_t k = 0; k < 4; ++k) s += h(0, k) * d.wi(k, j);
    mid(0, j) = std::max(0.0, s);
  }
  for (std::size_t j = 0; j < 6; ++j) {
    double s = d.bo(0, j);
    for (std::size_t k = 0; k < 4; ++k) s += mid(0, k) * d.wo(k, j);
    expect(0, j) = s;
  }
  EXPECT_LT(oracle::max_abs_diff(run_tdo(d, {h}), expect), 1e-14);
}

namespace {

Matrix run_exogenous(const std::vector<Matrix>& tables, std::vector<int> dow, std::vector<int> hol) {
  Tape t;
  const ExogenousVars ev{t.constant(tables[0]), t.constant(tables[1]), t.constant(tables[2]),
                         t.constant(tables[3])};
  return t.value(exogenous_offsets(t, ev, dow, hol));
}

}  // namespace

TEST(ExogenousOffsets, ZeroTablesGiveZero) {
  Rng rng(80);
  const std::vector<Matrix> tables{Matrix(7, 3), Matrix(2, 3), random_matrix(3, 6, rng), random_matrix(3, 6, rng)};
  EXPECT_EQ(run_exogenous(tables, {1, 7}, {0, 1}), Matrix(2, 6));
}

TEST(ExogenousOffsets, IdenticalCodesGiveIdenticalOffsets) {
  Rng rng(81);
  const std::vector<Matrix> tables{random_matrix(7, 3, rng), random_matrix(2, 3, rng), random_matrix(3, 6, rng),
                                   random_matrix(3, 6, rng)};
  const Matrix out = run_exogenous(tables, {3, 5, 3}, {1, 0, 1});
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(out(0, j), out(2, j));
  EXPECT_NE(out(0, 0), out(1, 0));
}

TEST(ExogenousOffsets, OutOfRangeCodesAreIndexErrors) {
  const std::vector<Matrix> tables{Matrix(7, 3), Matrix(2, 3), Matrix(3, 6), Matrix(3, 6)};
  EXPECT_THROW(run_exogenous(tables, {0}, {0}), IndexError);
  EXPECT_THROW(run_exogenous(tables, {8}, {0}), IndexError);
  EXPECT_THROW(run_exogenous(tables, {1}, {2}), IndexError);
}

TEST(MgcRnnModel, ZeroParametersGiveZeroForecast) {
  ModelConfig c = oracle::toy_config();
  c.exogenous = true;
  MgcRnn model(c, 1);
  for (auto& p : model.params()) p.value.fill(0.0);
  Rng rng(82);
  const ModelBatch batch = oracle::random_batch(c, 3, rng);
  EXPECT_EQ(model.predict(batch), Matrix(c.horizon * 3, c.outputs()));
}

TEST(MgcRnnModel, DisabledExogenousBranchHasNoParameters) {
  MgcRnn model(oracle::toy_config(), 1);
  for (const auto& p : model.params()) EXPECT_EQ(p.name.rfind("exo.", 0), std::string::npos) << p.name;
}

TEST(MgcRnnModel, OutputShapeAndInferenceDeterminism) {
  for (std::size_t p : {1u, 2u, 4u}) {
    ModelConfig c = oracle::toy_config();
    c.horizon = p;
    MgcRnn model(c, 3);
    Rng rng(83);
    const ModelBatch batch = oracle::random_batch(c, 2, rng);
    const Matrix a = model.predict(batch);
    EXPECT_EQ(a.rows(), p * 2);
    EXPECT_EQ(a.cols(), c.stations * c.channels);
    EXPECT_EQ(model.predict(batch), a);
  }
}

TEST(MgcRnnModel, DropoutOnlyInTraining) {
  const ModelConfig c = oracle::toy_config();
  MgcRnn model(c, 4);
  Rng rng(84);
  const ModelBatch batch = oracle::random_batch(c, 2, rng);
  Rng drop(5);
  Tape t;
  const Matrix trained = t.value(model.forward(t, batch, &drop));
  EXPECT_GT(oracle::max_abs_diff(trained, model.predict(batch)), 0.0);
}

TEST(MgcRnnModel, InterpretationWeightSharingAcrossSteps) {
  // With identical decoder hiddens the output dense sees equal inputs, so a
  // perturbation of interp.w moves every step by the same amount.
  ModelConfig c = oracle::toy_config();
  c.horizon = 3;
  MgcRnn model(c, 6);
  const std::size_t h = c.lstm_units;
  // Zero the decoder's recurrence and make its input path constant so every
  // decoder step repeats the same hidden state.
  model.params().at("dec.recurrent").value.fill(0.0);
  model.params().at("dec.kernel").value.fill(0.0);
  Matrix& bias = model.params().at("dec.bias").value;
  for (std::size_t j = h; j < 2 * h; ++j) bias(0, j) = -1e3;  // forget gate closed
  Rng rng(85);
  const ModelBatch batch = oracle::random_batch(c, 1, rng);
  const Matrix before = model.predict(batch);
  model.params().at("interp.w").value(0, 0) += 0.3;
  const Matrix after = model.predict(batch);
  for (std::size_t j = 0; j < c.outputs(); ++j) {
    EXPECT_NEAR(after(1, j) - before(1, j), after(0, j) - before(0, j), 1e-14);
    EXPECT_NEAR(after(2, j) - before(2, j), after(0, j) - before(0, j), 1e-14);
  }
}

TEST(MgcRnnModel, FullStackGradientsMatchFiniteDifferences) {
  ModelConfig c = oracle::toy_config();
  c.exogenous = true;
  MgcRnn model(c, 7);
  Rng rng(86);
  const ModelBatch batch = oracle::random_batch(c, 2, rng);
  const Matrix target = random_matrix(c.horizon * 2, c.outputs(), rng, 0.0, 1.0);
  for (const auto& g : oracle::check_model_gradients(model, batch, target))
    EXPECT_LT(g.relative_error, 1e-4) << g.parameter;
}

TEST(MgcRnnModel, MaskedModelEqualsZeroFusionWeights) {
  ModelConfig masked_cfg = oracle::toy_config();
  masked_cfg.mask = graph::GraphMask::parse("1,3,5");
  ModelConfig full_cfg = oracle::toy_config();
  MgcRnn masked(masked_cfg, 8);
  MgcRnn full(full_cfg, 9);
  for (auto& p : full.params()) {
    if (const Parameter* src = masked.params().find(p.name)) p.value = src->value;
  }
  full.params().at("mgc.fuse2").value.fill(0.0);
  full.params().at("mgc.fuse4").value.fill(0.0);
  Rng rng(87);
  const ModelBatch batch = oracle::random_batch(full_cfg, 2, rng);
  EXPECT_LE(oracle::max_abs_diff(masked.predict(batch), full.predict(batch)), 1e-12);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ModelConfig c = oracle::toy_config();
  c.exogenous = true;
  MgcRnn model(c, 10);
  AdamState adam(model.params());
  adam.t = 17;
  Rng rng(88);
  for (auto& m : adam.m) m = random_matrix(m.rows(), m.cols(), rng);
  const auto path = std::filesystem::temp_directory_path() / "mgcrnn_ckpt_test.json";
  save_checkpoint(model, path, &adam);
  MgcRnn other(c, 11);
  AdamState back;
  load_checkpoint(other, path, &back);
  for (std::size_t i = 0; i < model.params().size(); ++i) EXPECT_EQ(other.params()[i].value, model.params()[i].value);
  EXPECT_EQ(back.t, 17u);
  EXPECT_EQ(back.m, adam.m);
  std::filesystem::remove(path);
}

TEST(Checkpoint, ConfigMismatchIsRejected) {
  const ModelConfig c = oracle::toy_config();
  MgcRnn model(c, 12);
  const auto path = std::filesystem::temp_directory_path() / "mgcrnn_ckpt_mismatch.json";
  save_checkpoint(model, path);
  ModelConfig other_cfg = c;
  other_cfg.lstm_units = 6;
  MgcRnn other(other_cfg, 12);
  EXPECT_THROW(load_checkpoint(other, path), ConfigError);
  std::filesystem::remove(path);
}
