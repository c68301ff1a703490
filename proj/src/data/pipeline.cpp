#include "mgcrnn/data/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "mgcrnn/core/csv.hpp"
#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/layout.hpp"

namespace mgcrnn {

std::vector<Date> SlotSeries::days() const {
  std::vector<Date> out;
  for (const auto& s : calendar)
    if (out.empty() || out.back() != s.date) out.push_back(s.date);
  return out;
}

std::size_t SlotSeries::first_row_on(Date date) const {
  for (std::size_t t = 0; t < calendar.size(); ++t)
    if (std::chrono::sys_days{calendar[t].date} >= std::chrono::sys_days{date}) return t;
  return calendar.size();
}

void SlotSeries::validate() const {
  if (values.cols() != station_ids.size() * kChannels)
    throw DataError("slot series: " + std::to_string(values.cols()) + " columns for " +
                    std::to_string(station_ids.size()) + " stations");
  if (calendar.size() != values.rows())
    throw DataError("slot series: calendar has " + std::to_string(calendar.size()) + " stamps for " +
                    std::to_string(values.rows()) + " rows");
}

SlotSeries read_flows(const std::filesystem::path& path, const std::vector<std::string>& station_ids) {
  const auto t = csv::read_file(path);
  const auto c_date = t.column("date"), c_slot = t.column("slot_index"), c_station = t.column("station_id"),
             c_in = t.column("inflow"), c_out = t.column("outflow");
  std::map<std::string, std::size_t> station_index;
  for (std::size_t i = 0; i < station_ids.size(); ++i) station_index[station_ids[i]] = i;

  struct Key {
    std::chrono::sys_days day;
    long slot;
    bool operator<(const Key& o) const { return day != o.day ? day < o.day : slot < o.slot; }
  };
  std::map<Key, std::vector<double>> rows;
  std::map<Key, std::vector<bool>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = t.source + " line " + std::to_string(r + 2);
    auto it = station_index.find(row[c_station]);
    if (it == station_index.end()) throw DataError(where + ": unknown station '" + row[c_station] + "'");
    const long slot = csv::parse_int(row[c_slot], where + " slot_index");
    if (slot < 0) throw DataError(where + ": negative slot_index");
    const Key key{std::chrono::sys_days{parse_date(row[c_date])}, slot};
    auto& values = rows[key];
    auto& flags = seen[key];
    if (values.empty()) {
      values.assign(station_ids.size() * kChannels, 0.0);
      flags.assign(station_ids.size(), false);
    }
    if (flags[it->second]) throw DataError(where + ": duplicate row for station '" + row[c_station] + "'");
    flags[it->second] = true;
    values[flow_col(it->second, kInflow)] = csv::parse_double(row[c_in], where + " inflow");
    values[flow_col(it->second, kOutflow)] = csv::parse_double(row[c_out], where + " outflow");
  }
  SlotSeries s;
  s.station_ids = station_ids;
  s.values = Matrix(rows.size(), station_ids.size() * kChannels);
  std::size_t r = 0;
  for (const auto& [key, values] : rows) {
    const auto& flags = seen[key];
    for (std::size_t i = 0; i < flags.size(); ++i)
      if (!flags[i])
        throw DataError(t.source + ": no row for station '" + station_ids[i] + "' on " +
                        format_date(Date{key.day}) + " slot " + std::to_string(key.slot));
    s.calendar.push_back({Date{key.day}, static_cast<std::size_t>(key.slot)});
    std::copy(values.begin(), values.end(), s.values.row(r).begin());
    ++r;
  }
  return s;
}

void write_flows(const SlotSeries& series, const std::filesystem::path& path) {
  series.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "date,slot_index,station_id,inflow,outflow\n";
  for (std::size_t t = 0; t < series.slots(); ++t) {
    const std::string date = format_date(series.calendar[t].date);
    for (std::size_t i = 0; i < series.stations(); ++i)
      out << date << ',' << series.calendar[t].slot << ',' << csv::escape(series.station_ids[i]) << ','
          << csv::format_double(series.values(t, flow_col(i, kInflow))) << ','
          << csv::format_double(series.values(t, flow_col(i, kOutflow))) << '\n';
  }
}

SlotSeries rolling_hour(const SlotSeries& raw) {
  raw.validate();
  SlotSeries out;
  out.station_ids = raw.station_ids;
  const std::size_t cols = raw.values.cols();
  std::vector<double> buf;
  std::size_t t = 0;
  while (t < raw.slots()) {
    const Date day = raw.calendar[t].date;
    std::size_t end = t;
    while (end < raw.slots() && raw.calendar[end].date == day) ++end;
    const std::size_t len = end - t;
    if (len != kRawSlotsPerDay)
      throw DataError("rolling_hour: " + format_date(day) + " has " + std::to_string(len) + " raw slots, expected " +
                      std::to_string(kRawSlotsPerDay));
    for (std::size_t k = 0; k < len; ++k)
      if (raw.calendar[t + k].slot != k)
        throw DataError("rolling_hour: " + format_date(day) + " slots are not 0…65 in order");
    for (std::size_t k = kRollingWidth - 1; k < len; ++k) {
      for (std::size_t c = 0; c < cols; ++c) {
        double s = 0.0;
        for (std::size_t w = 0; w < kRollingWidth; ++w) s += raw.values(t + k - w, c);
        buf.push_back(s);
      }
      out.calendar.push_back({day, k});
    }
    t = end;
  }
  out.values = Matrix(out.calendar.size(), cols, std::move(buf));
  return out;
}

Matrix log_transform(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) {
    if (!(v >= 0.0)) throw ContractError("log_transform: negative or NaN flow value " + std::to_string(v));
    v = std::log1p(v);
  }
  return y;
}

Matrix log_inverse(const Matrix& y) {
  Matrix x = y;
  for (double& v : x.values()) v = std::expm1(v);
  return x;
}

Matrix seasonal_difference(const Matrix& y, std::size_t lag) {
  if (lag == 0) throw ParameterError("seasonal_difference: lag must be positive");
  if (y.rows() <= lag)
    throw DataError("seasonal_difference: series of " + std::to_string(y.rows()) + " slots is not longer than lag " +
                    std::to_string(lag));
  Matrix z(y.rows() - lag, y.cols());
  for (std::size_t t = 0; t < z.rows(); ++t)
    for (std::size_t c = 0; c < y.cols(); ++c) z(t, c) = y(t + lag, c) - y(t, c);
  return z;
}

Matrix seasonal_undifference(const Matrix& diffs, const Matrix& history, std::size_t first_level, std::size_t lag) {
  if (diffs.rows() == 0) return Matrix(0, diffs.cols());
  if (first_level < lag || first_level - lag + diffs.rows() > history.rows()) {
    const long lo = static_cast<long>(first_level) - static_cast<long>(lag);
    throw DataError("seasonal_undifference: needs level slots " + std::to_string(lo) + " … " +
                    std::to_string(lo + static_cast<long>(diffs.rows()) - 1) + ", history holds 0 … " +
                    std::to_string(static_cast<long>(history.rows()) - 1));
  }
  if (history.cols() != diffs.cols())
    throw DimensionError("seasonal_undifference: history " + history.shape_string() + " vs diffs " +
                         diffs.shape_string());
  Matrix y(diffs.rows(), diffs.cols());
  for (std::size_t t = 0; t < diffs.rows(); ++t)
    for (std::size_t c = 0; c < diffs.cols(); ++c) y(t, c) = diffs(t, c) + history(first_level - lag + t, c);
  return y;
}

void MinMaxScaler::fit(const Matrix& z, std::optional<std::size_t> rows) {
  const std::size_t n = rows.value_or(z.rows());
  if (n == 0 || n > z.rows())
    throw ContractError("MinMaxScaler::fit: needs between 1 and " + std::to_string(z.rows()) + " rows, got " +
                        std::to_string(n));
  min_.assign(z.cols(), 0.0);
  max_.assign(z.cols(), 0.0);
  for (std::size_t c = 0; c < z.cols(); ++c) {
    double lo = z(0, c), hi = z(0, c);
    for (std::size_t t = 1; t < n; ++t) {
      lo = std::min(lo, z(t, c));
      hi = std::max(hi, z(t, c));
    }
    min_[c] = lo;
    max_[c] = hi;
  }
}

void MinMaxScaler::set_state(std::vector<double> min, std::vector<double> max) {
  if (min.size() != max.size()) throw ContractError("MinMaxScaler::set_state: size mismatch");
  for (std::size_t c = 0; c < min.size(); ++c)
    if (!(max[c] >= min[c])) throw ContractError("MinMaxScaler::set_state: max < min in column " + std::to_string(c));
  min_ = std::move(min);
  max_ = std::move(max);
}

void MinMaxScaler::require_fitted(std::size_t cols, const char* op) const {
  if (!fitted()) throw StateError(std::string("MinMaxScaler::") + op + " called before fit");
  if (cols != min_.size())
    throw DimensionError(std::string("MinMaxScaler::") + op + ": " + std::to_string(cols) +
                         " columns, fitted on " + std::to_string(min_.size()));
}

Matrix MinMaxScaler::transform(const Matrix& z) const {
  require_fitted(z.cols(), "transform");
  Matrix u(z.rows(), z.cols());
  for (std::size_t c = 0; c < z.cols(); ++c) {
    const double span = max_[c] - min_[c];
    for (std::size_t t = 0; t < z.rows(); ++t) u(t, c) = span > 0.0 ? (z(t, c) - min_[c]) / span : 0.5;
  }
  return u;
}

Matrix MinMaxScaler::inverse(const Matrix& u) const {
  require_fitted(u.cols(), "inverse");
  Matrix z(u.rows(), u.cols());
  for (std::size_t c = 0; c < u.cols(); ++c) {
    const double span = max_[c] - min_[c];
    for (std::size_t t = 0; t < u.rows(); ++t) z(t, c) = span > 0.0 ? u(t, c) * span + min_[c] : min_[c];
  }
  return z;
}

ExogenousCodes encode_exogenous(std::span<const SlotStamp> calendar, const std::set<Date>& holidays) {
  ExogenousCodes codes;
  codes.day_of_week.reserve(calendar.size());
  codes.holiday.reserve(calendar.size());
  for (const auto& s : calendar) {
    codes.day_of_week.push_back(iso_weekday(s.date));
    codes.holiday.push_back(holidays.count(s.date) ? 1 : 0);
  }
  return codes;
}

Preprocessed forward_pipeline(const SlotSeries& raw, const std::set<Date>& holidays, std::optional<Date> split_date,
                              PipelineOptions options) {
  Preprocessed p;
  p.options = options;
  p.rolled = rolling_hour(raw);
  const std::size_t lag = options.lag;
  if (p.rolled.slots() <= lag)
    throw DataError("forward_pipeline: " + std::to_string(p.rolled.slots()) +
                    " rolled slots leave nothing after the first " + std::to_string(lag));
  p.levels = options.log ? log_transform(p.rolled.values) : p.rolled.values;
  p.offset = lag;
  if (options.difference) {
    p.diffs = seasonal_difference(p.levels, lag);
  } else {
    auto tail = p.levels.values().subspan(lag * p.levels.cols());
    p.diffs = Matrix(p.levels.rows() - lag, p.levels.cols(), std::vector<double>(tail.begin(), tail.end()));
  }
  p.split = p.diffs.rows();
  if (split_date) {
    const std::size_t first = p.rolled.first_row_on(*split_date);
    if (first <= lag)
      throw ConfigError("forward_pipeline: split date " + format_date(*split_date) +
                        " leaves no training slots after the first " + std::to_string(lag));
    if (first >= p.rolled.slots())
      throw ConfigError("forward_pipeline: split date " + format_date(*split_date) + " is after the last day");
    p.split = first - lag;
  }
  p.scaler.fit(p.diffs, p.split);
  p.scaled = p.scaler.transform(p.diffs);
  p.exogenous = encode_exogenous(p.rolled.calendar, holidays);
  return p;
}

Matrix inverse_pipeline(const Matrix& scaled, std::span<const std::size_t> rows, const Preprocessed& state) {
  if (rows.size() != scaled.rows())
    throw DimensionError("inverse_pipeline: " + std::to_string(scaled.rows()) + " predictions for " +
                         std::to_string(rows.size()) + " row indices");
  Matrix level = state.scaler.inverse(scaled);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t slot = state.rolled_slot(rows[r]);
    if (slot >= state.levels.rows() + state.options.lag)
      throw DataError("inverse_pipeline: row " + std::to_string(rows[r]) + " lies past the series");
    if (!state.options.difference) continue;
    const std::size_t ref = slot - state.options.lag;
    if (ref >= state.levels.rows())
      throw DataError("inverse_pipeline: lag reference slot " + std::to_string(ref) + " is not in the history");
    for (std::size_t c = 0; c < level.cols(); ++c) level(r, c) += state.levels(ref, c);
  }
  if (state.options.log) level = log_inverse(level);
  for (double& v : level.values()) v = std::max(v, 0.0);
  return level;
}

Matrix inverse_pipeline(const Preprocessed& state) {
  std::vector<std::size_t> rows(state.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  return inverse_pipeline(state.scaled, rows, state);
}

WindowSet make_windows(const Matrix& scaled, std::size_t l, std::size_t p, std::size_t split, std::size_t slot_offset,
                       const ExogenousCodes* exogenous) {
  if (l == 0 || p == 0) throw ConfigError("make_windows: l and p must be positive");
  const std::size_t t_len = scaled.rows();
  if (t_len < l + p)
    throw DataError("make_windows: series of " + std::to_string(t_len) + " slots is shorter than l + p = " +
                    std::to_string(l + p));
  if (exogenous != nullptr && exogenous->day_of_week.size() < slot_offset + t_len)
    throw DataError("make_windows: exogenous codes do not cover every slot");
  WindowSet set;
  set.total = t_len - (l + p) + 1;
  const std::size_t cols = scaled.cols();
  for (std::size_t a = 0; a < set.total; ++a) {
    const bool train = a + l + p <= split;
    const bool test = a + l >= split;
    if (!train && !test) continue;
    SampleWindow w;
    w.anchor = a;
    auto in = scaled.values().subspan(a * cols, l * cols);
    auto out = scaled.values().subspan((a + l) * cols, p * cols);
    w.inputs = Matrix(l, cols, std::vector<double>(in.begin(), in.end()));
    w.targets = Matrix(p, cols, std::vector<double>(out.begin(), out.end()));
    for (std::size_t k = 0; k < l; ++k) w.input_slots.push_back(slot_offset + a + k);
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t slot = slot_offset + a + l + j;
      w.day_of_week.push_back(exogenous ? exogenous->day_of_week[slot] : 1);
      w.holiday.push_back(exogenous ? exogenous->holiday[slot] : 0);
    }
    (train ? set.train : set.test).push_back(std::move(w));
  }
  return set;
}

WindowSet make_windows(const Preprocessed& data, std::size_t l, std::size_t p) {
  return make_windows(data.scaled, l, p, data.split, data.offset, &data.exogenous);
}

}  // namespace mgcrnn
