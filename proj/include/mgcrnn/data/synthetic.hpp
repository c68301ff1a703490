#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "mgcrnn/data/calendar.hpp"
#include "mgcrnn/data/pipeline.hpp"
#include "mgcrnn/graph/graph_set.hpp"
#include "mgcrnn/graph/network.hpp"

namespace mgcrnn {

enum class StationMix { commuter_origin, commuter_destination, uniform };

std::string_view mix_name(StationMix mix);

struct SyntheticConfig {
  std::size_t stations = 12;
  std::size_t days = 14;
  Date start = parse_date("2013-09-12");
  std::uint64_t seed = 7;
  std::vector<std::string> lines{"1", "2"};
  double center_lat = 22.5431;
  double center_lon = 114.0579;
  /// Fractions of non-transfer stations by type; the remainder is uniform.
  double origin_share = 0.45;
  double destination_share = 0.35;
  double base_min = 20.0;  // passengers per 15-minute slot at profile level 1
  double base_max = 60.0;
  double am_amplitude = 1.6;
  double pm_amplitude = 1.4;
  double minor_peak_share = 0.3;  // weight of the off-direction peak
  double off_peak_level = 0.25;
  double weekend_level = 0.55;
  double day_factor_sd = 0.08;     // shared day-to-day demand swing (log scale)
  double station_day_sd = 0.04;    // per-station day-to-day swing (log scale)
  double noise_level = 0.0;        // extra per-slot multiplicative jitter on top of Poisson counts
  std::set<Date> holidays{parse_date("2013-09-19"), parse_date("2013-09-20"), parse_date("2013-09-21")};
  double holiday_damping = 0.7;

  void validate() const;
};

struct SyntheticDataset {
  graph::StationNetwork network;
  graph::FeatureMatrix poi;
  graph::FeatureMatrix structure;
  graph::FeatureMatrix operational;
  SlotSeries flows;  // raw 66-slot days, integer counts
  std::set<Date> holidays;
  std::vector<StationMix> mix;
  std::vector<double> base;  // per-station demand scale
};

/// Expected-rate profile (before the station scale and day factors) for one
/// channel at a raw slot; `weekend` selects the weekend shape. Holidays use
/// the weekday shape scaled by the damping factor.
double profile_rate(const SyntheticConfig& config, StationMix mix, bool weekend, std::size_t slot,
                    std::size_t channel);

/// Two lines crossing at one transfer station, features derived from that
/// topology and Poisson flows drawn around the daily profiles. Deterministic
/// in config.seed. Throws ConfigError for fewer than 3 stations (two lines
/// need at least one station beyond the transfer on each), fewer than 2 days
/// or negative amplitudes.
SyntheticDataset generate_synthetic(const SyntheticConfig& config);

/// File names written by write_dataset and read back by the CLI.
struct DatasetPaths {
  std::filesystem::path stations, edges, poi, structure, operational, flows, holidays;
  static DatasetPaths in(const std::filesystem::path& dir);
};

void write_dataset(const SyntheticDataset& data, const DatasetPaths& paths);

}  // namespace mgcrnn
