// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.
// MGCRNN_ACCEPTANCE_ONLY=5,6 restricts the run to the listed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "mgcrnn/cli/commands.hpp"
#include "mgcrnn/core/csv.hpp"
#include "mgcrnn/core/log.hpp"
#include "mgcrnn/eval/experiment.hpp"
#include "mgcrnn/graph/reconstruct.hpp"
#include "mgcrnn/model/mgc_layer.hpp"
#include "support/eval_oracles.hpp"
#include "support/model_fixtures.hpp"
#include "support/reconstruct_oracle.hpp"
#include "support/series_fixtures.hpp"

using namespace mgcrnn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  ModelConfig c = oracle::toy_config();  // N=3, l=4, p=2, U=4, H=5, all five graphs
  c.exogenous = true;
  MgcRnn model(c, 2024);
  Rng rng(17);
  const ModelBatch batch = oracle::random_batch(c, 2, rng);
  const Matrix target = oracle::random_matrix(c.horizon * 2, c.outputs(), rng, 0.0, 1.0);
  double worst = 0.0;
  std::string worst_name;
  const auto checks = oracle::check_model_gradients(model, batch, target);
  for (const auto& g : checks)
    if (g.relative_error > worst || worst_name.empty()) {
      worst = g.relative_error;
      worst_name = g.parameter;
    }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 120.0 && !checks.empty(),
          fmt("%zu tensors, max relative error %.2e (%s), %.1fs", checks.size(), worst, worst_name.c_str(), secs)};
}

Outcome convex_solver() {
  const Matrix x{{1, 1, 0}, {0, 0, 1}};
  const Matrix lap = graph::feature_laplacian(x);
  graph::ReconstructOptions opt;
  opt.rho1 = 0.01;
  opt.rho2 = 0.0;
  const auto res = graph::sparse_reconstruct(x, lap, opt);
  const auto ref = oracle::projected_gradient_oracle(x, lap, 0.01, 0.0, 1e-10);
  const double gap = std::abs(graph::reconstruction_objective(x, lap, res.weights, 0.01, 0.0) - ref.objective);
  bool ok = gap <= 1e-3 && res.weights(0, 1) >= 0.9 && res.weights(1, 0) >= 0.9;
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(5000 + seed);
    const Matrix xr = oracle::random_matrix(6, 9, rng, 0.0, 1.0);
    const auto r = graph::sparse_reconstruct(xr, graph::feature_laplacian(xr), {});
    for (std::size_t k = 1; k < r.objective.size(); ++k) violations += r.objective[k] > r.objective[k - 1];
  }
  ok = ok && violations == 0;
  return {ok, fmt("objective gap %.2e, W12 %.4f, W21 %.4f, monotonicity violations over 20 seeds: %zu", gap,
                  res.weights(0, 1), res.weights(1, 0), violations)};
}

Outcome preprocessing_roundtrip() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(900 + seed);
    const std::size_t days = 3 + seed % 4;
    SlotSeries raw = oracle::random_raw_series(2 + seed % 3, days, rng, seed % 2 ? 500.0 : 5.0);
    if (seed % 5 == 0)  // sparse series with many zeros
      for (double& v : raw.values.values())
        if (rng.below(3) != 0) v = 0.0;
    const Preprocessed p = forward_pipeline(raw, {});
    const Matrix back = inverse_pipeline(p);
    const Matrix& rolled = p.rolled.values;
    for (std::size_t r = 0; r < back.rows(); ++r)
      for (std::size_t c = 0; c < back.cols(); ++c)
        worst = std::max(worst, std::abs(back(r, c) - rolled(p.rolled_slot(r), c)));
    ++cases;
  }
  return {worst < 1e-9, fmt("%zu random series (3-6 days), max abs error %.2e", cases, worst)};
}

Outcome metric_oracles() {
  Rng rng(31337);
  double worst = 0.0;
  bool props = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<double> y(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.below(6) == 0 ? 0.0 : rng.uniform(0, 500);
      f[i] = rng.below(6) == 0 ? 0.0 : rng.uniform(-20, 500);
    }
    const auto ref = oracle::brute_metrics(y, f);
    worst = std::max({worst, std::abs(rmse(y, f) - ref.rmse) / std::max(1.0, ref.rmse),
                      std::abs(mae(y, f) - ref.mae) / std::max(1.0, ref.mae), std::abs(smape(y, f) - ref.smape)});
    const double s = smape(y, f);
    props = props && s == smape(f, y) && s >= 0.0 && s <= 2.0 && rmse(y, f) >= mae(y, f);
  }
  return {worst <= 1e-12 && props, fmt("100 vectors, max deviation %.2e, symmetry/bound/rmse>=mae %s", worst,
                                       props ? "hold" : "violated")};
}

// Criteria 5 and 6 share one training run on the desk dataset.
struct DeskRun {
  Forecasts ha, lasso, model;
  double seconds = 0.0;
};

const DeskRun& desk_run() {
  static const DeskRun run = [] {
    const auto t0 = Clock::now();
    DeskRun r;
    const Dataset d = to_dataset(generate_synthetic(SyntheticConfig{}));  // N=12, 2 lines, 14 days, seed 7
    const Prepared p = prepare(d, PrepareOptions{});
    r.ha = ha_forecasts(p);
    r.lasso = lasso_forecasts(lasso_fit(p.windows.train), p);
    ModelConfig mc;
    mc.mask = graph::GraphMask::parse("1,3,5");
    TrainOptions to;  // 50 epochs, batch 16, lr0 0.002, decay 0.002, δ = 1
    to.on_epoch = [](const EpochRecord& e) {
      if (e.epoch % 10 == 0) spdlog::info("desk run: epoch {} loss {:.5f}", e.epoch, e.loss);
    };
    r.model = train_and_forecast(p, mc, to, 7).forecasts;
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

std::string steps_text(const std::vector<MetricReport>& steps) {
  std::string s;
  for (const auto& r : steps) s += (s.empty() ? "" : "/") + fmt("%.3f", r.rmse);
  return s;
}

Outcome learning_works() {
  const DeskRun& r = desk_run();
  const double m = overall_report(r.model.predicted, r.model.truth).rmse;
  const double ha = overall_report(r.ha.predicted, r.ha.truth).rmse;
  const double la = overall_report(r.lasso.predicted, r.lasso.truth).rmse;
  const bool ok = m <= 0.8 * ha && m <= 0.9 * la && r.seconds < 1800.0;
  return {ok, fmt("RMSE MGC-RNN %.3f, HA %.3f (%.1f%% lower), LASSO %.3f (%.1f%% lower), %.0fs", m, ha,
                  100.0 * (1.0 - m / ha), la, 100.0 * (1.0 - m / la), r.seconds)};
}

Outcome multi_step_error() {
  const DeskRun& r = desk_run();
  const auto ms = per_step_report(r.model.predicted, r.model.truth, r.model.horizon);
  const auto ls = per_step_report(r.lasso.predicted, r.lasso.truth, r.lasso.horizon);
  const double m_var = std::abs(ms.back().rmse - ms.front().rmse) / ms.front().rmse;
  bool nondecreasing = true;
  for (std::size_t k = 1; k < ls.size(); ++k) nondecreasing = nondecreasing && ls[k].rmse >= ls[k - 1].rmse;
  const double l_growth = ls.back().rmse / ls.front().rmse - 1.0;
  const bool ok = m_var <= 0.15 && nondecreasing && l_growth >= 0.25;
  return {ok, fmt("MGC-RNN steps %s (step1->4 change %.1f%%), LASSO steps %s (growth %.1f%%, %s)",
                  steps_text(ms).c_str(), 100.0 * m_var, steps_text(ls).c_str(), 100.0 * l_growth,
                  nondecreasing ? "nondecreasing" : "not monotone")};
}

Outcome ablation_fidelity() {
  const auto t0 = Clock::now();
  const Dataset d = to_dataset(generate_synthetic(SyntheticConfig{}));
  const std::vector<AblationSpec> specs{AblationSpec::parse("M1+M2+M3+M4+M5"), AblationSpec::parse("M1+M3+M5"),
                                        AblationSpec::parse("M1+M5")};
  TrainOptions to;
  to.epochs = 2;  // the table's shape is under test here, not its accuracy
  const auto rows = run_ablation(specs, d, PrepareOptions{}, ModelConfig{}, to, 7);
  bool well_formed = rows.size() == specs.size();
  for (std::size_t i = 0; well_formed && i < rows.size(); ++i) {
    const auto& r = rows[i];
    well_formed = r.spec.label() == specs[i].label() && r.steps.size() == 4 && std::isfinite(r.overall.rmse) &&
                  r.overall.rmse >= r.overall.mae && r.overall.smape >= 0.0 && r.overall.smape <= 2.0;
  }
  const auto tmp = std::filesystem::temp_directory_path() / "mgcrnn_acceptance_ablation.csv";
  const auto report = ablation_report(rows);
  write_report_csv(report, tmp);
  well_formed = well_formed && read_report_csv(tmp).size() == specs.size() * 5;
  std::filesystem::remove(tmp);

  ModelConfig masked_cfg = oracle::toy_config();
  masked_cfg.mask = graph::GraphMask::parse("1,3,5");
  MgcRnn masked(masked_cfg, 8);
  MgcRnn full(oracle::toy_config(), 9);
  for (auto& p : full.params())
    if (const Parameter* src = masked.params().find(p.name)) p.value = src->value;
  full.params().at("mgc.fuse2").value.fill(0.0);
  full.params().at("mgc.fuse4").value.fill(0.0);
  Rng rng(88);
  const ModelBatch batch = oracle::random_batch(oracle::toy_config(), 3, rng);
  const double diff = oracle::max_abs_diff(masked.predict(batch), full.predict(batch));
  return {well_formed && diff <= 1e-12,
          fmt("table %s (%zu specs x overall+4 steps), masked vs zeroed-W2/W4 max diff %.2e, %.0fs",
              well_formed ? "well-formed" : "malformed", rows.size(), diff, seconds_since(t0))};
}

Outcome normalization_spectrum() {
  Rng rng(4242);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.below(3) == 0 ? 0.0 : rng.uniform(0, 10);
    const Matrix an = normalize_adjacency(a);
    Matrix v = oracle::random_matrix(n, 1, rng, 0.1, 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 1000; ++it) {
      const Matrix w = oracle::naive_matmul(an, v);
      lambda = frobenius_norm(w) / frobenius_norm(v);
      v = w * (1.0 / frobenius_norm(w));
    }
    worst = std::max(worst, lambda);
  }
  return {worst <= 1.0 + 1e-9, fmt("50 matrices, largest spectral radius estimate %.12f", worst)};
}

Outcome determinism() {
  const auto t0 = Clock::now();
  const auto base = std::filesystem::temp_directory_path() / "mgcrnn_acceptance_determinism";
  std::filesystem::remove_all(base);
  std::vector<Matrix> outputs;
  for (const char* run : {"a", "b"}) {
    const auto dir = base / run;
    const cli::RunConfig c = cli::load_run_config(
        std::nullopt, {"data_dir=" + (dir / "data").string(), "output_dir=" + (dir / "out").string(), "epochs=3",
                       "graph_mask=1,3,5"});
    for (const char* cmd : {"synth", "graphs", "train", "predict"})
      if (cli::run_command(cmd, c) != 0) return {false, std::string("command '") + cmd + "' failed"};
    const auto t = csv::read_file(dir / "out" / "predictions.csv");
    Matrix m(t.rows.size(), 2);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      m(r, 0) = csv::parse_double(t.rows[r][t.column("inflow_pred")], "inflow_pred");
      m(r, 1) = csv::parse_double(t.rows[r][t.column("outflow_pred")], "outflow_pred");
    }
    outputs.push_back(std::move(m));
  }
  std::filesystem::remove_all(base);
  const bool same_shape = outputs[0].rows() == outputs[1].rows() && outputs[0].rows() > 0;
  const double diff = same_shape ? oracle::max_abs_diff(outputs[0], outputs[1]) : INFINITY;
  return {same_shape && diff <= 1e-12,
          fmt("%zu prediction rows per run, max difference %.2e, %.0fs", outputs[0].rows(), diff, seconds_since(t0))};
}

}  // namespace

int main() {
  configure_logging_from_env();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient integrity", gradient_integrity},
      {"convex-solver equivalence", convex_solver},
      {"preprocessing roundtrip", preprocessing_roundtrip},
      {"metric oracles", metric_oracles},
      {"learning works", learning_works},
      {"non-propagating multi-step error", multi_step_error},
      {"ablation harness fidelity", ablation_fidelity},
      {"normalization spectrum", normalization_spectrum},
      {"determinism", determinism},
  };
  std::set<std::size_t> only;
  if (const char* env = std::getenv("MGCRNN_ACCEPTANCE_ONLY")) {
    std::stringstream ss(env);
    for (std::string tok; std::getline(ss, tok, ',');)
      if (!tok.empty()) only.insert(std::stoul(tok));
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] criterion %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
