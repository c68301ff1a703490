#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgcrnn/core/matrix.hpp"

namespace mgcrnn {

/// Root mean squared error. Throws ContractError on empty or unequal inputs.
double rmse(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);
/// Mean of 2|y − ŷ| / (|y| + |ŷ|); a term with |y| + |ŷ| = 0 counts as 0.
double smape(std::span<const double> y, std::span<const double> y_hat);

enum class MetricScope { overall, step, station };

struct MetricReport {
  MetricScope scope = MetricScope::overall;
  std::size_t index = 0;  // 1-based step or 0-based station; unused for overall
  double rmse = 0.0;
  double mae = 0.0;
  double smape = 0.0;

  /// "overall", "1".."p", or "station:<i>".
  [[nodiscard]] std::string scope_label() const;
};

MetricReport metric_report(std::span<const double> y, std::span<const double> y_hat,
                           MetricScope scope = MetricScope::overall, std::size_t index = 0);

/// predictions and truth are (W·p)×C with row w·p + k holding step k+1 of
/// window w. Returns one report per step.
std::vector<MetricReport> per_step_report(const Matrix& predictions, const Matrix& truth, std::size_t p);
MetricReport overall_report(const Matrix& predictions, const Matrix& truth);
/// One report per station over both channels; columns ordered by flow_col().
std::vector<MetricReport> per_station_report(const Matrix& predictions, const Matrix& truth);

/// One line of a comparison table.
struct ReportRow {
  std::string spec;
  MetricReport report;
};

/// CSV with header spec,step,rmse,mae,smape; step is the scope label.
void write_report_csv(std::span<const ReportRow> rows, const std::filesystem::path& path);
/// JSON array of {spec, step, rmse, mae, smape}.
void write_report_json(std::span<const ReportRow> rows, const std::filesystem::path& path);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

}  // namespace mgcrnn
