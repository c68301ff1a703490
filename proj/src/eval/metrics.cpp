#include "mgcrnn/eval/metrics.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mgcrnn/core/csv.hpp"
#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/layout.hpp"

namespace mgcrnn {

namespace {

void require_pair(std::span<const double> y, std::span<const double> y_hat, const char* what) {
  if (y.size() != y_hat.size())
    throw ContractError(std::string(what) + ": " + std::to_string(y.size()) + " truths vs " +
                        std::to_string(y_hat.size()) + " predictions");
  if (y.empty()) throw ContractError(std::string(what) + ": empty input");
}

void require_same(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError(std::string(what) + ": predictions " + a.shape_string() + " vs truth " + b.shape_string());
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  require_pair(y, y_hat, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
  require_pair(y, y_hat, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double smape(std::span<const double> y, std::span<const double> y_hat) {
  require_pair(y, y_hat, "smape");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double den = std::abs(y[i]) + std::abs(y_hat[i]);
    if (den > 0.0) s += 2.0 * std::abs(y[i] - y_hat[i]) / den;
  }
  return s / static_cast<double>(y.size());
}

std::string MetricReport::scope_label() const {
  switch (scope) {
    case MetricScope::overall: return "overall";
    case MetricScope::step: return std::to_string(index);
    case MetricScope::station: return "station:" + std::to_string(index);
  }
  return "?";
}

MetricReport metric_report(std::span<const double> y, std::span<const double> y_hat, MetricScope scope,
                           std::size_t index) {
  return MetricReport{scope, index, rmse(y, y_hat), mae(y, y_hat), smape(y, y_hat)};
}

std::vector<MetricReport> per_step_report(const Matrix& predictions, const Matrix& truth, std::size_t p) {
  require_same(predictions, truth, "per_step_report");
  if (p == 0 || predictions.rows() % p != 0)
    throw ContractError("per_step_report: " + std::to_string(predictions.rows()) + " rows do not split into " +
                        std::to_string(p) + " steps");
  std::vector<MetricReport> out;
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<double> y, yh;
    for (std::size_t r = k; r < truth.rows(); r += p) {
      y.insert(y.end(), truth.row(r).begin(), truth.row(r).end());
      yh.insert(yh.end(), predictions.row(r).begin(), predictions.row(r).end());
    }
    out.push_back(metric_report(y, yh, MetricScope::step, k + 1));
  }
  return out;
}

MetricReport overall_report(const Matrix& predictions, const Matrix& truth) {
  require_same(predictions, truth, "overall_report");
  return metric_report(truth.values(), predictions.values());
}

std::vector<MetricReport> per_station_report(const Matrix& predictions, const Matrix& truth) {
  require_same(predictions, truth, "per_station_report");
  std::vector<MetricReport> out;
  for (std::size_t i = 0; i < truth.cols() / kChannels; ++i) {
    std::vector<double> y, yh;
    for (std::size_t r = 0; r < truth.rows(); ++r)
      for (std::size_t c = 0; c < kChannels; ++c) {
        y.push_back(truth(r, flow_col(i, c)));
        yh.push_back(predictions(r, flow_col(i, c)));
      }
    out.push_back(metric_report(y, yh, MetricScope::station, i));
  }
  return out;
}

void write_report_csv(std::span<const ReportRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "spec,step,rmse,mae,smape\n";
  for (const auto& r : rows)
    out << csv::escape(r.spec) << ',' << r.report.scope_label() << ',' << csv::format_double(r.report.rmse) << ','
        << csv::format_double(r.report.mae) << ',' << csv::format_double(r.report.smape) << '\n';
}

void write_report_json(std::span<const ReportRow> rows, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"spec", r.spec}, {"step", r.report.scope_label()}, {"rmse", r.report.rmse},
                 {"mae", r.report.mae}, {"smape", r.report.smape}});
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  const auto t = csv::read_file(path);
  const auto c_spec = t.column("spec"), c_step = t.column("step"), c_rmse = t.column("rmse"),
             c_mae = t.column("mae"), c_smape = t.column("smape");
  std::vector<ReportRow> out;
  for (const auto& r : t.rows) {
    ReportRow row;
    row.spec = r[c_spec];
    const std::string& step = r[c_step];
    if (step == "overall") {
      row.report.scope = MetricScope::overall;
    } else if (step.rfind("station:", 0) == 0) {
      row.report.scope = MetricScope::station;
      row.report.index = static_cast<std::size_t>(csv::parse_int(step.substr(8), t.source + " step"));
    } else {
      row.report.scope = MetricScope::step;
      row.report.index = static_cast<std::size_t>(csv::parse_int(step, t.source + " step"));
    }
    row.report.rmse = csv::parse_double(r[c_rmse], t.source + " rmse");
    row.report.mae = csv::parse_double(r[c_mae], t.source + " mae");
    row.report.smape = csv::parse_double(r[c_smape], t.source + " smape");
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace mgcrnn
