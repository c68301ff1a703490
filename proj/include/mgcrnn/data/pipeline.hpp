#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mgcrnn/core/matrix.hpp"
#include "mgcrnn/data/calendar.hpp"

namespace mgcrnn {

inline constexpr std::size_t kRawSlotsPerDay = 66;     // 06:30–23:00 in 15-minute slots
inline constexpr std::size_t kRolledSlotsPerDay = 63;  // after the one-hour rolling sum
inline constexpr std::size_t kRollingWidth = 4;
inline constexpr std::size_t kSeasonLag = 63;

struct SlotStamp {
  Date date;
  std::size_t slot = 0;  // raw slot-of-day index, 0 = 06:30
};

/// Slot-major flow table: values is T × (N·2) with columns ordered by
/// flow_col(); calendar has one stamp per row.
struct SlotSeries {
  std::vector<std::string> station_ids;
  std::vector<SlotStamp> calendar;
  Matrix values;

  [[nodiscard]] std::size_t slots() const { return values.rows(); }
  [[nodiscard]] std::size_t stations() const { return station_ids.size(); }
  /// Distinct dates in row order.
  [[nodiscard]] std::vector<Date> days() const;
  /// Index of the first row on or after date, or slots() if none.
  [[nodiscard]] std::size_t first_row_on(Date date) const;
  void validate() const;
};

/// Flow CSV: date,slot_index,station_id,inflow,outflow. Rows may come in any
/// order; the result is sorted by (date, slot) and station order follows
/// station_ids. Every (date, slot) present must list every station.
SlotSeries read_flows(const std::filesystem::path& path, const std::vector<std::string>& station_ids);
void write_flows(const SlotSeries& series, const std::filesystem::path& path);

/// Sum over the current and three preceding raw slots of the same day; the
/// first three slots of each day are dropped, leaving 63 per day. Throws
/// DataError naming the date when a day does not have exactly 66 raw slots.
SlotSeries rolling_hour(const SlotSeries& raw);

/// ln(1 + x); throws ContractError for negative entries.
Matrix log_transform(const Matrix& x);
/// eʸ − 1 (no clamping).
Matrix log_inverse(const Matrix& y);

/// Row t of the result is y(t + lag) − y(t). Requires more than lag rows.
Matrix seasonal_difference(const Matrix& y, std::size_t lag = kSeasonLag);

/// Rebuilds level rows first_level … first_level + diffs.rows() − 1 from
/// diffs and the levels lag slots earlier, taken from history (indexed in
/// the same level coordinates). Throws DataError naming the missing slots.
Matrix seasonal_undifference(const Matrix& diffs, const Matrix& history, std::size_t first_level,
                             std::size_t lag = kSeasonLag);

/// Per-column min-max scaler.
class MinMaxScaler {
 public:
  /// Fits on rows [0, rows) of z (all rows by default).
  void fit(const Matrix& z, std::optional<std::size_t> rows = std::nullopt);
  [[nodiscard]] bool fitted() const { return !min_.empty(); }
  /// (z − min)/(max − min); a column with max = min maps to 0.5. No clipping.
  [[nodiscard]] Matrix transform(const Matrix& z) const;
  /// Inverse of transform; a degenerate column maps back to its constant.
  [[nodiscard]] Matrix inverse(const Matrix& u) const;
  [[nodiscard]] const std::vector<double>& min() const { return min_; }
  [[nodiscard]] const std::vector<double>& max() const { return max_; }
  void set_state(std::vector<double> min, std::vector<double> max);

 private:
  void require_fitted(std::size_t cols, const char* op) const;
  std::vector<double> min_;
  std::vector<double> max_;
};

struct ExogenousCodes {
  std::vector<int> day_of_week;  // 1..7, Monday = 1
  std::vector<int> holiday;      // 0/1
};

ExogenousCodes encode_exogenous(std::span<const SlotStamp> calendar, const std::set<Date>& holidays);

struct PipelineOptions {
  bool log = true;
  bool difference = true;
  std::size_t lag = kSeasonLag;
};

/// Every stage of the forward chain. Row i of diffs/scaled belongs to rolled
/// slot i + offset; offset = lag even when differencing is off so that a
/// preprocessing ablation evaluates exactly the same target slots.
struct Preprocessed {
  PipelineOptions options;
  SlotSeries rolled;  // passengers per rolling hour
  Matrix levels;      // log1p(rolled) when options.log, else rolled
  Matrix diffs;
  MinMaxScaler scaler;
  Matrix scaled;
  ExogenousCodes exogenous;  // per rolled slot
  std::size_t offset = 0;
  std::size_t split = 0;  // first scaled row in the test span

  [[nodiscard]] std::size_t rows() const { return scaled.rows(); }
  [[nodiscard]] std::size_t rolled_slot(std::size_t row) const { return row + offset; }
};

/// rolling → log → seasonal difference → min-max, with the scaler fitted on
/// rows before the first slot of split_date (the test span). Without a split
/// date the scaler sees every row and the test span is empty.
Preprocessed forward_pipeline(const SlotSeries& raw, const std::set<Date>& holidays,
                              std::optional<Date> split_date = std::nullopt, PipelineOptions options = {});

/// Maps scaled predictions back to passengers. Row r of scaled is the
/// forecast for scaled row rows[r]; the lag reference is the ground-truth
/// level. Min-max inverse → seasonal-difference inverse → log inverse → clamp
/// at 0.
Matrix inverse_pipeline(const Matrix& scaled, std::span<const std::size_t> rows, const Preprocessed& state);
/// All rows of state.scaled in order; reproduces the rolled series from
/// slot offset on.
Matrix inverse_pipeline(const Preprocessed& state);

/// One training or test example. Input rows anchor … anchor+l−1 and target
/// rows anchor+l … anchor+l+p−1 index the scaled series.
struct SampleWindow {
  std::size_t anchor = 0;
  Matrix inputs;                        // l × (N·2)
  Matrix targets;                       // p × (N·2)
  std::vector<std::size_t> input_slots;  // rolled slot of each input row
  std::vector<int> day_of_week;         // per target step
  std::vector<int> holiday;             // per target step

  [[nodiscard]] std::size_t target_row(std::size_t step) const { return anchor + inputs.rows() + step; }
};

struct WindowSet {
  std::vector<SampleWindow> train;
  std::vector<SampleWindow> test;
  std::size_t total = 0;  // every stride-1 window, including those straddling the split
};

/// Stride-1 windows over scaled rows. Training windows lie entirely before
/// split; test windows have every target at or after split. slot_offset
/// converts a scaled row to its rolled slot; exogenous is indexed by rolled
/// slot and may be empty.
WindowSet make_windows(const Matrix& scaled, std::size_t l, std::size_t p, std::size_t split,
                       std::size_t slot_offset = 0, const ExogenousCodes* exogenous = nullptr);
WindowSet make_windows(const Preprocessed& data, std::size_t l, std::size_t p);

}  // namespace mgcrnn
