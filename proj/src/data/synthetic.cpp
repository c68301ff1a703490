#include "mgcrnn/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/layout.hpp"
#include "mgcrnn/core/rng.hpp"
#include "mgcrnn/data/afc.hpp"

namespace mgcrnn {

std::string_view mix_name(StationMix mix) {
  switch (mix) {
    case StationMix::commuter_origin: return "commuter-origin";
    case StationMix::commuter_destination: return "commuter-destination";
    case StationMix::uniform: return "uniform";
  }
  return "unknown";
}

void SyntheticConfig::validate() const {
  if (stations < 3)
    throw ConfigError("synthetic config: " + std::to_string(stations) +
                      " stations cannot form two lines through a transfer station (need at least 3)");
  if (days < 2) throw ConfigError("synthetic config: need at least 2 days (differencing uses the prior day)");
  if (lines.size() != 2) throw ConfigError("synthetic config: exactly two line names are required");
  for (double v : {am_amplitude, pm_amplitude, minor_peak_share, off_peak_level, weekend_level, day_factor_sd,
                   station_day_sd, noise_level})
    if (!(v >= 0.0)) throw ConfigError("synthetic config: amplitudes and noise levels must be nonnegative");
  if (!(base_min > 0.0) || !(base_max >= base_min)) throw ConfigError("synthetic config: need 0 < base_min <= base_max");
  if (!(holiday_damping >= 0.0)) throw ConfigError("synthetic config: holiday damping must be nonnegative");
  if (origin_share < 0.0 || destination_share < 0.0 || origin_share + destination_share > 1.0)
    throw ConfigError("synthetic config: station mix shares must be nonnegative and sum to at most 1");
}

namespace {

double bump(double h, double mu, double sigma) { return std::exp(-(h - mu) * (h - mu) / (2.0 * sigma * sigma)); }

}  // namespace

double profile_rate(const SyntheticConfig& c, StationMix mix, bool weekend, std::size_t slot, std::size_t channel) {
  const double h = 6.5 + (static_cast<double>(slot) + 0.5) * 0.25;
  if (weekend) return c.weekend_level * (0.3 + bump(h, 14.5, 3.0));
  const double am = c.am_amplitude, pm = c.pm_amplitude, minor = c.minor_peak_share;
  const bool in = channel == kInflow;
  switch (mix) {
    case StationMix::commuter_origin:
      return c.off_peak_level + (in ? am * bump(h, 8.0, 0.8) + minor * pm * bump(h, 18.0, 1.0)
                                    : minor * am * bump(h, 8.25, 0.8) + pm * bump(h, 18.25, 1.0));
    case StationMix::commuter_destination:
      return c.off_peak_level + (in ? minor * am * bump(h, 8.0, 0.8) + pm * bump(h, 18.0, 1.0)
                                    : am * bump(h, 8.5, 0.8) + minor * pm * bump(h, 18.25, 1.0));
    case StationMix::uniform:
      return c.off_peak_level + 0.5 * (am * bump(h, 8.25, 0.9) + pm * bump(h, 18.0, 1.1)) + 0.3 * bump(h, 12.5, 1.5);
  }
  return 0.0;
}

DatasetPaths DatasetPaths::in(const std::filesystem::path& dir) {
  return {dir / "stations.csv", dir / "edges.csv",     dir / "poi.csv",     dir / "structure.csv",
          dir / "operational.csv", dir / "flows.csv", dir / "holidays.txt"};
}

SyntheticDataset generate_synthetic(const SyntheticConfig& c) {
  c.validate();
  const Rng root(c.seed);
  SyntheticDataset out;
  out.holidays = c.holidays;
  const std::size_t n = c.stations;
  const std::size_t n1 = (n + 2) / 2;  // line 1 length including the transfer
  const std::size_t n2 = n + 1 - n1;
  const std::size_t t1 = n1 / 2, t2 = n2 / 2;  // transfer position on each line

  // Geometry: line 1 runs west to east, line 2 south to north, crossing near the centre.
  Rng geo = root.split("geometry");
  const double km_lat = 1.0 / 111.195, km_lon = km_lat / std::cos(c.center_lat * 3.141592653589793 / 180.0);
  const double cross_lat = c.center_lat + 0.6 * km_lat, cross_lon = c.center_lon - 0.4 * km_lon;
  auto& st = out.network.stations;
  std::vector<std::size_t> line1_idx, line2_idx;
  std::vector<std::size_t> position(n);
  std::size_t transfer = 0;
  double offset = 0.0;
  for (std::size_t k = 0; k < n1; ++k) {
    const double step = k == 0 ? 0.0 : geo.uniform(0.9, 1.6);
    offset += step;
    char id[32];
    std::snprintf(id, sizeof id, k == t1 ? "t1%02zu" : "1%02zu", k + 1);
    graph::Station s{id, std::string("Station ") + id, {c.lines[0]}, 0.0, 0.0};
    s.lon = offset;  // fixed below once the transfer offset is known
    s.lat = cross_lat + geo.uniform(-0.15, 0.15) * km_lat;
    if (k == t1) {
      s.lines.push_back(c.lines[1]);
      transfer = st.size();
    }
    position[st.size()] = k;
    line1_idx.push_back(st.size());
    st.push_back(std::move(s));
  }
  const double t1_off = st[transfer].lon;
  for (std::size_t i : line1_idx) st[i].lon = cross_lon + (st[i].lon - t1_off) * km_lon;
  st[transfer].lat = cross_lat;

  std::vector<double> l2_off(n2, 0.0);
  for (std::size_t k = 1; k < n2; ++k) l2_off[k] = l2_off[k - 1] + geo.uniform(0.9, 1.6);
  for (std::size_t k = 0; k < n2; ++k) {
    if (k == t2) {
      line2_idx.push_back(transfer);
      continue;
    }
    char id[32];
    std::snprintf(id, sizeof id, "2%02zu", k + 1);
    graph::Station s{id, std::string("Station ") + id, {c.lines[1]}, 0.0, 0.0};
    s.lat = cross_lat + (l2_off[k] - l2_off[t2]) * km_lat;
    s.lon = cross_lon + geo.uniform(-0.15, 0.15) * km_lon;
    position[st.size()] = k;
    line2_idx.push_back(st.size());
    st.push_back(std::move(s));
  }
  for (const auto* line : {&line1_idx, &line2_idx})
    for (std::size_t k = 0; k + 1 < line->size(); ++k) {
      const auto& a = st[(*line)[k]];
      const auto& b = st[(*line)[k + 1]];
      const double km = city_center_distance(a.lat, a.lon, b.lat, b.lon);
      out.network.edges.push_back({(*line)[k], (*line)[k + 1], std::round((1.0 + km / 0.6) * 10.0) / 10.0});
    }
  out.network.validate();

  // Station mix: central stations attract commuters, outer ones send them.
  std::vector<double> center_km(n);
  for (std::size_t i = 0; i < n; ++i) center_km[i] = city_center_distance(st[i].lat, st[i].lon, c.center_lat, c.center_lon);
  std::vector<std::size_t> by_distance(n);
  std::iota(by_distance.begin(), by_distance.end(), 0);
  std::stable_sort(by_distance.begin(), by_distance.end(),
                   [&](std::size_t a, std::size_t b) { return center_km[a] < center_km[b]; });
  out.mix.assign(n, StationMix::uniform);
  const auto others = static_cast<double>(n - 1);
  const auto n_dest = static_cast<std::size_t>(std::round(c.destination_share * others));
  std::vector<std::size_t> ranked;
  for (std::size_t i : by_distance)
    if (i != transfer) ranked.push_back(i);
  const std::size_t n_orig =
      std::min(static_cast<std::size_t>(std::round(c.origin_share * others)), ranked.size() - std::min(n_dest, ranked.size()));
  out.mix[transfer] = StationMix::commuter_destination;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (r < n_dest) out.mix[ranked[r]] = StationMix::commuter_destination;
    else if (r >= ranked.size() - n_orig) out.mix[ranked[r]] = StationMix::commuter_origin;
  }

  Rng base_rng = root.split("base");
  out.base.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.base[i] = base_rng.uniform(c.base_min, c.base_max) * (i == transfer ? 1.5 : 1.0);

  // POI counts within the catchment; means depend on the station mix.
  const std::vector<std::string> poi_names{"residential", "office",  "commercial", "education",     "medical",
                                           "hotel",       "dining", "leisure",    "transport_hub"};
  const double poi_origin[] = {45, 6, 10, 8, 3, 2, 15, 5, 1};
  const double poi_dest[] = {8, 40, 30, 3, 5, 10, 35, 12, 2};
  const double poi_uniform[] = {22, 18, 18, 6, 4, 5, 22, 9, 1};
  Rng poi_rng = root.split("poi");
  out.poi.names = poi_names;
  out.poi.values = Matrix(poi_names.size(), n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* mean = out.mix[i] == StationMix::commuter_origin ? poi_origin
                         : out.mix[i] == StationMix::commuter_destination ? poi_dest : poi_uniform;
    for (std::size_t p = 0; p < poi_names.size(); ++p)
      out.poi.values(p, i) = static_cast<double>(poi_rng.poisson(mean[p] * (i == transfer && p == 8 ? 4.0 : 1.0)));
  }

  // Network structure: degree, betweenness, days open, distance to the centre.
  const auto degree = graph::degree_centrality(out.network);
  const auto between = graph::betweenness_centrality(out.network);
  const Date opened[] = {parse_date("2004-12-28"), parse_date("2010-12-28")};
  out.structure.names = {"degree", "betweenness", "days_open", "center_distance_km"};
  out.structure.values = Matrix(4, n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool on_line1 = std::find(line1_idx.begin(), line1_idx.end(), i) != line1_idx.end();
    const std::size_t len = on_line1 ? n1 : n2;
    const std::size_t pos = position[i];
    // Stations at the line ends came with later extensions.
    const bool extension = pos == 0 || pos + 1 == len;
    const Date open = add_days(opened[on_line1 ? 0 : 1], extension ? 365 * 2 : 0);
    out.structure.values(0, i) = degree[i];
    out.structure.values(1, i) = between[i];
    out.structure.values(2, i) =
        static_cast<double>((std::chrono::sys_days{c.start} - std::chrono::sys_days{open}).count());
    out.structure.values(3, i) = center_km[i];
  }

  // Operational features from per-line timetables.
  out.operational.names = {"peak_headway_min", "offpeak_headway_min", "lines_served", "first_train_min"};
  out.operational.values = Matrix(4, n);
  const double peak[] = {2.5, 3.5}, offpeak[] = {6.0, 7.5};
  auto minutes_from_start = [&](const std::vector<std::size_t>& line, std::size_t i) {
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < line.size() && line[k] != i; ++k) m += 2.5;
    return m;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const bool l1 = std::find(line1_idx.begin(), line1_idx.end(), i) != line1_idx.end();
    const bool l2 = std::find(line2_idx.begin(), line2_idx.end(), i) != line2_idx.end();
    out.operational.values(0, i) = l1 && l2 ? std::min(peak[0], peak[1]) : peak[l1 ? 0 : 1];
    out.operational.values(1, i) = l1 && l2 ? std::min(offpeak[0], offpeak[1]) : offpeak[l1 ? 0 : 1];
    out.operational.values(2, i) = static_cast<double>(st[i].lines.size());
    out.operational.values(3, i) = 30.0 + (l1 ? minutes_from_start(line1_idx, i) : minutes_from_start(line2_idx, i));
  }

  // Flows.
  SlotSeries& f = out.flows;
  f.station_ids = out.network.ids();
  f.values = Matrix(c.days * kRawSlotsPerDay, n * kChannels);
  Rng day_rng = root.split("day-factors");
  Rng count_rng = root.split("counts");
  for (std::size_t d = 0; d < c.days; ++d) {
    const Date date = add_days(c.start, static_cast<int>(d));
    const bool weekend = iso_weekday(date) >= 6;
    const double damp = c.holidays.count(date) ? c.holiday_damping : 1.0;
    const double day_factor = std::exp(c.day_factor_sd * day_rng.normal());
    std::vector<double> station_factor(n);
    for (double& v : station_factor) v = std::exp(c.station_day_sd * day_rng.normal());
    for (std::size_t k = 0; k < kRawSlotsPerDay; ++k) {
      const std::size_t t = d * kRawSlotsPerDay + k;
      f.calendar.push_back({date, k});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
          double rate = out.base[i] * day_factor * station_factor[i] * damp * profile_rate(c, out.mix[i], weekend, k, ch);
          if (c.noise_level > 0.0) rate *= std::exp(c.noise_level * count_rng.normal());
          f.values(t, flow_col(i, ch)) = static_cast<double>(count_rng.poisson(rate));
        }
    }
  }
  return out;
}

void write_dataset(const SyntheticDataset& data, const DatasetPaths& paths) {
  graph::write_network(data.network, paths.stations, paths.edges);
  graph::write_features(data.poi, data.network, paths.poi);
  graph::write_features(data.structure, data.network, paths.structure);
  graph::write_features(data.operational, data.network, paths.operational);
  write_flows(data.flows, paths.flows);
  write_holidays(data.holidays, paths.holidays);
}

}  // namespace mgcrnn
