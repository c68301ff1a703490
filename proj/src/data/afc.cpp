#include "mgcrnn/data/afc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "mgcrnn/core/csv.hpp"
#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/layout.hpp"

namespace mgcrnn {

namespace {

constexpr int kOpenSeconds = 6 * 3600 + 30 * 60;
constexpr int kSlotSeconds = 15 * 60;

std::optional<TapType> parse_type(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "in" || s == "tap-in" || s == "tapin" || s == "entry") return TapType::in;
  if (s == "out" || s == "tap-out" || s == "tapout" || s == "exit") return TapType::out;
  return std::nullopt;
}

// "YYYY-MM-DD HH:MM:SS" (a 'T' separator is accepted too).
std::optional<std::pair<Date, int>> parse_timestamp(const std::string& s) {
  if (s.size() < 19 || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' || s[16] != ':') return std::nullopt;
  try {
    const Date d = parse_date(s.substr(0, 10));
    const int h = std::stoi(s.substr(11, 2)), m = std::stoi(s.substr(14, 2)), sec = std::stoi(s.substr(17, 2));
    if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59) return std::nullopt;
    return std::make_pair(d, h * 3600 + m * 60 + sec);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::optional<std::size_t> slot_of_time(int seconds_of_day) {
  if (seconds_of_day < kOpenSeconds) return std::nullopt;
  const auto k = static_cast<std::size_t>((seconds_of_day - kOpenSeconds) / kSlotSeconds);
  if (k >= kRawSlotsPerDay) return std::nullopt;
  return k;
}

AfcResult parse_afc(std::istream& in, const graph::StationNetwork& net, const AfcOptions& options) {
  AfcResult res;
  std::string header;
  if (!std::getline(in, header)) header.clear();
  const auto cols = csv::split_line(header);
  const std::vector<std::string> expect{"transaction_id", "card_id",          "line_id",
                                        "station_name",   "transaction_type", "timestamp"};
  if (!header.empty() && cols != expect)
    throw DataError("AFC header must be transaction_id,card_id,line_id,station_name,transaction_type,timestamp");

  struct Count {
    std::chrono::sys_days day;
    std::size_t slot, station;
    TapType type;
  };
  std::vector<Count> counts;
  std::size_t line_no = 1;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto reject = [&](std::string reason) { res.rejected.push_back({line_no, line, std::move(reason)}); };
    std::vector<std::string> f;
    try {
      f = csv::split_line(line);
    } catch (const std::exception& e) {
      reject(e.what());
      continue;
    }
    if (f.size() != 6) {
      reject("expected 6 fields, found " + std::to_string(f.size()));
      continue;
    }
    const auto station = net.index_of_name(f[3]);
    if (!station) {
      reject("unknown station '" + f[3] + "'");
      continue;
    }
    const auto type = parse_type(f[4]);
    if (!type) {
      reject("unknown transaction type '" + f[4] + "'");
      continue;
    }
    const auto ts = parse_timestamp(f[5]);
    if (!ts) {
      reject("malformed timestamp '" + f[5] + "'");
      continue;
    }
    const auto slot = slot_of_time(ts->second);
    if (!slot) {
      reject("timestamp " + f[5] + " is outside operating hours 06:30-23:00");
      continue;
    }
    const std::chrono::sys_days day{ts->first};
    if ((options.first_day && day < std::chrono::sys_days{*options.first_day}) ||
        (options.last_day && day > std::chrono::sys_days{*options.last_day})) {
      reject("date " + format_date(ts->first) + " is outside the requested day range");
      continue;
    }
    counts.push_back({day, *slot, *station, *type});
    (*type == TapType::in ? res.accepted_in : res.accepted_out) += 1;
  }

  std::optional<std::chrono::sys_days> lo, hi;
  if (options.first_day) lo = std::chrono::sys_days{*options.first_day};
  if (options.last_day) hi = std::chrono::sys_days{*options.last_day};
  for (const auto& c : counts) {
    if (!options.first_day && (!lo || c.day < *lo)) lo = c.day;
    if (!options.last_day && (!hi || c.day > *hi)) hi = c.day;
  }
  SlotSeries& s = res.flows;
  s.station_ids = net.ids();
  if (!lo || !hi || *hi < *lo) {
    s.values = Matrix(0, net.size() * kChannels);
    return res;
  }
  const auto days = static_cast<std::size_t>((*hi - *lo).count() + 1);
  s.values = Matrix(days * kRawSlotsPerDay, net.size() * kChannels);
  for (std::size_t d = 0; d < days; ++d)
    for (std::size_t k = 0; k < kRawSlotsPerDay; ++k)
      s.calendar.push_back({Date{*lo + std::chrono::days{static_cast<int>(d)}}, k});
  for (const auto& c : counts) {
    const auto d = static_cast<std::size_t>((c.day - *lo).count());
    s.values(d * kRawSlotsPerDay + c.slot, flow_col(c.station, c.type == TapType::in ? kInflow : kOutflow)) += 1.0;
  }
  return res;
}

AfcResult parse_afc(const std::filesystem::path& path, const graph::StationNetwork& net, const AfcOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open AFC file '" + path.string() + "'");
  return parse_afc(in, net, options);
}

void write_rejections(const std::vector<RejectedRecord>& rejected, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "line,reason,record\n";
  for (const auto& r : rejected)
    out << r.line << ',' << csv::escape(r.reason) << ',' << csv::escape(r.record) << '\n';
}

double city_center_distance(double lat, double lon, double lat0, double lon0) {
  for (double v : {lat, lat0})
    if (!(std::abs(v) <= 90.0)) throw ParameterError("city_center_distance: latitude " + std::to_string(v) + " outside ±90");
  for (double v : {lon, lon0})
    if (!(std::abs(v) <= 180.0)) throw ParameterError("city_center_distance: longitude " + std::to_string(v) + " outside ±180");
  constexpr double rad = std::numbers::pi / 180.0;
  const double p1 = lat * rad, p2 = lat0 * rad, dl = (lon - lon0) * rad;
  // sin φ₁ sin φ₂ + cos φ₁ cos φ₂ cos Δλ, rearranged as
  // cos(φ₁ − φ₂) − cos φ₁ cos φ₂ (1 − cos Δλ) so coincident points give exactly 1.
  const double c = std::cos(p1 - p2) - std::cos(p1) * std::cos(p2) * (1.0 - std::cos(dl));
  return kEarthRadiusKm * std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace mgcrnn
