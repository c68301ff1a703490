#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/eval/experiment.hpp"
#include "support/model_fixtures.hpp"

using namespace mgcrnn;

namespace {

const Dataset& small_dataset() {
  static const Dataset d = [] {
    SyntheticConfig c;
    c.stations = 4;
    c.days = 3;
    c.holidays.clear();
    return to_dataset(generate_synthetic(c));
  }();
  return d;
}

PrepareOptions small_options() {
  PrepareOptions o;
  o.input_len = 4;
  o.horizon = 2;
  return o;
}

const Prepared& small_prepared() {
  static const Prepared p = prepare(small_dataset(), small_options());
  return p;
}

ModelConfig small_model() {
  ModelConfig c = oracle::toy_config();
  c.stations = 4;
  return c;
}

TrainOptions quick_training() {
  TrainOptions t;
  t.epochs = 1;
  t.batch_size = 16;
  return t;
}

}  // namespace

TEST(Prepare, SplitsOnLastDayAndCoversWindowSlots) {
  const Prepared& p = small_prepared();
  EXPECT_EQ(p.data.rows(), 2u * 63u);
  EXPECT_EQ(p.data.split, 63u);
  EXPECT_EQ(p.windows.test.size(), 63u - 2u + 1u);
  for (const auto& w : p.windows.train)
    for (std::size_t s : w.input_slots) EXPECT_TRUE(p.graphs.has_slot(s));
  for (const auto& w : p.windows.test)
    for (std::size_t s : w.input_slots) EXPECT_TRUE(p.graphs.has_slot(s));
}

TEST(Prepare, ReusesGivenGraphsAndRejectsMismatch) {
  const Prepared again = prepare(small_dataset(), small_options(), &small_prepared().graphs);
  EXPECT_EQ(again.graphs.static_graphs[2], small_prepared().graphs.static_graphs[2]);
  graph::GraphSet wrong = small_prepared().graphs;
  wrong.station_ids[0] = "zz";
  EXPECT_THROW(prepare(small_dataset(), small_options(), &wrong), DataError);
}

TEST(Forecasts, PerfectScaledForecastInvertsToTruth) {
  const Prepared& p = small_prepared();
  const auto& test = p.windows.test;
  Matrix scaled(test.size() * p.horizon, 8);
  for (std::size_t w = 0; w < test.size(); ++w)
    for (std::size_t k = 0; k < p.horizon; ++k)
      for (std::size_t c = 0; c < 8; ++c) scaled(w * p.horizon + k, c) = test[w].targets(k, c);
  const Forecasts f = from_scaled(p, scaled);
  EXPECT_LT(oracle::max_abs_diff(f.predicted, f.truth), 1e-9);
  EXPECT_EQ(f.target_slots.size(), test.size() * p.horizon);
  EXPECT_EQ(overall_report(f.predicted, f.truth).smape < 1e-9, true);
}

TEST(Forecasts, HaUsesEarlierDaysOfTheSamePhase) {
  const Prepared& p = small_prepared();
  const Forecasts f = ha_forecasts(p);
  const auto& rolled = p.data.rolled.values;
  for (std::size_t r = 0; r < f.target_slots.size(); ++r) {
    const std::size_t t = f.target_slots[r];
    for (std::size_t c = 0; c < rolled.cols(); ++c)
      EXPECT_NEAR(f.predicted(r, c), (rolled(t - 63, c) + rolled(t - 126, c)) / 2.0, 1e-12);
  }
}

TEST(Forecasts, LassoForecastsAreFiniteAndNonnegative) {
  const Prepared& p = small_prepared();
  const Forecasts f = lasso_forecasts(lasso_fit(p.windows.train), p);
  for (double v : f.predicted.values()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
}

TEST(Forecasts, CsvHasOneRowPerWindowStepStation) {
  const Prepared& p = small_prepared();
  const auto path = std::filesystem::temp_directory_path() / "mgcrnn_forecasts.csv";
  write_forecasts_csv(ha_forecasts(p), p, path);
  std::ifstream in(path);
  std::size_t lines = 0;
  for (std::string s; std::getline(in, s);) ++lines;
  EXPECT_EQ(lines, 1 + p.windows.test.size() * p.horizon * 4);
  std::filesystem::remove(path);
}

TEST(AblationSpec, LabelsRoundtrip) {
  for (const auto& s : default_ablation_specs()) {
    const AblationSpec back = AblationSpec::parse(s.label());
    EXPECT_EQ(back.mask, s.mask);
    EXPECT_EQ(back.exogenous, s.exogenous);
    EXPECT_EQ(back.preprocessing, s.preprocessing);
  }
  EXPECT_EQ(AblationSpec::parse("M1+M3+M5+exo").label(), "M1+M3+M5+exo");
  EXPECT_THROW(AblationSpec::parse("M7"), ConfigError);
}

TEST(AblationSpec, DefaultListHasTheBestTableRow) {
  const auto specs = default_ablation_specs();
  const auto target = graph::GraphMask::parse("1,3,5");
  bool found = false;
  for (const auto& s : specs) found |= s.mask == target && !s.exogenous && s.preprocessing;
  EXPECT_TRUE(found);
  EXPECT_EQ(specs.size(), 8u);
}

TEST(RunAblation, IdenticalSpecsGiveIdenticalRows) {
  const std::vector<AblationSpec> specs{AblationSpec::parse("M1+M3+M5"), AblationSpec::parse("M1+M3+M5")};
  const auto rows = run_ablation(specs, small_dataset(), small_options(), small_model(), quick_training(), 3,
                                 &small_prepared().graphs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].overall.rmse, rows[1].overall.rmse);
  EXPECT_EQ(rows[0].overall.mae, rows[1].overall.mae);
  EXPECT_EQ(rows[0].overall.smape, rows[1].overall.smape);
  EXPECT_EQ(rows[0].steps.size(), 2u);
}

TEST(RunAblation, SingleGraphExogenousAndNoPreprocessingRun) {
  const std::vector<AblationSpec> specs{AblationSpec::parse("M5"), AblationSpec::parse("M1+exo"),
                                        AblationSpec::parse("M1+M3+M5-nopre")};
  const auto rows = run_ablation(specs, small_dataset(), small_options(), small_model(), quick_training(), 3);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_TRUE(std::isfinite(r.overall.rmse));
    EXPECT_GE(r.overall.smape, 0.0);
    EXPECT_LE(r.overall.smape, 2.0);
  }
  const auto report = ablation_report(rows);
  EXPECT_EQ(report.size(), 3u * 3u);
  EXPECT_EQ(report.front().spec, "M5");
}
