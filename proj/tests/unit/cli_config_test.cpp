#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mgcrnn/cli/run_config.hpp"
#include "mgcrnn/core/errors.hpp"

using namespace mgcrnn;
using namespace mgcrnn::cli;

TEST(RunConfig, DefaultsMatchPublishedHyperparameters) {
  const RunConfig c;
  EXPECT_EQ(c.input_len, 16u);
  EXPECT_EQ(c.horizon, 4u);
  EXPECT_EQ(c.gcn_units, 64u);
  EXPECT_EQ(c.lstm_units, 200u);
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_EQ(c.epochs, 50u);
  EXPECT_EQ(c.lr0, 0.002);
  EXPECT_EQ(c.decay, 0.002);
  EXPECT_EQ(c.dropout, 0.2);
  EXPECT_EQ(c.recurrent_dropout, 0.2);
  EXPECT_EQ(c.huber_delta, 1.0);
  EXPECT_EQ(c.rho1, 0.1);
  EXPECT_EQ(c.rho2, 0.01);
  EXPECT_NO_THROW(c.validate());
  const ModelConfig m = c.model_config(12);
  EXPECT_EQ(m.lstm_units, 200u);
  EXPECT_EQ(m.mask, graph::GraphMask::all());
  const TrainOptions t = c.train_options();
  EXPECT_EQ(t.batch_size, 16u);
  EXPECT_EQ(t.huber_delta, 1.0);
}

TEST(RunConfig, ParsesFileWithCommentsAndOverrides) {
  const auto path = std::filesystem::temp_directory_path() / "mgcrnn_cfg_test.conf";
  {
    std::ofstream out(path);
    out << "# comment\n\nepochs = 3   # trailing\ngraph_mask = 1,3,5\nsplit_date = 2013-09-25\nexogenous = true\n"
        << "ablation_specs = M1+M3+M5; M1+M5+exo\n";
  }
  const RunConfig c = load_run_config(path, {"epochs=7", "lr0 = 0.01"});
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.lr0, 0.01);
  EXPECT_EQ(c.graph_mask, graph::GraphMask::parse("1,3,5"));
  ASSERT_TRUE(c.split_date);
  EXPECT_EQ(format_date(*c.split_date), "2013-09-25");
  EXPECT_TRUE(c.exogenous);
  ASSERT_EQ(c.ablation_specs.size(), 2u);
  EXPECT_EQ(c.ablation_specs[1].label(), "M1+M5+exo");
  std::filesystem::remove(path);
}

TEST(RunConfig, TextRoundtrip) {
  RunConfig c;
  c.set("epochs", "9");
  c.set("graph_mask", "2,4");
  c.set("export_slots", "2013-09-25 08:00; 2013-09-25 18:00");
  const RunConfig back = parse_run_config(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.export_slots.size(), 2u);
}

TEST(RunConfig, RejectsBadInput) {
  RunConfig c;
  EXPECT_THROW(c.set("nope", "1"), ConfigError);
  EXPECT_THROW(c.set("epochs", "-1"), ConfigError);
  EXPECT_THROW(c.set("lr0", "fast"), ConfigError);
  EXPECT_THROW(c.set("exogenous", "maybe"), ConfigError);
  EXPECT_THROW(c.set("split_date", "2013-13-01"), ConfigError);
  EXPECT_THROW(c.set("graph_mask", ""), ConfigError);
  EXPECT_THROW(parse_run_config("epochs 3\n"), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"epochs=0"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"dropout=1"}), ConfigError);
  EXPECT_THROW(load_run_config(std::filesystem::path("/nonexistent/x.conf")), ConfigError);
}
