#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgcrnn/data/calendar.hpp"
#include "mgcrnn/data/pipeline.hpp"
#include "mgcrnn/graph/network.hpp"

namespace mgcrnn {

enum class TapType { in, out };

struct Transaction {
  std::string transaction_id;
  std::string card_id;
  std::string line_id;
  std::string station_name;
  TapType type = TapType::in;
  Date date;
  int seconds_of_day = 0;
};

struct RejectedRecord {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string record;
  std::string reason;
};

struct AfcOptions {
  /// Day range of the output table; defaults to the span of accepted records.
  std::optional<Date> first_day;
  std::optional<Date> last_day;
};

struct AfcResult {
  SlotSeries flows;  // raw 66-slot days
  std::vector<RejectedRecord> rejected;
  std::size_t accepted_in = 0;
  std::size_t accepted_out = 0;
};

/// Slot of a time of day: [06:30 + 15k, 06:30 + 15(k+1)) ↦ k for k = 0…65;
/// nullopt outside operating hours.
std::optional<std::size_t> slot_of_time(int seconds_of_day);

/// Counts tap-ins (inflow) and tap-outs (outflow) per station and 15-minute
/// slot from an AFC CSV stream with header
/// transaction_id,card_id,line_id,station_name,transaction_type,timestamp.
/// Stations are matched by name. Malformed records, unknown stations and
/// records outside operating hours or the day range are reported in
/// `rejected` instead of aborting.
AfcResult parse_afc(std::istream& in, const graph::StationNetwork& net, const AfcOptions& options = {});
AfcResult parse_afc(const std::filesystem::path& path, const graph::StationNetwork& net,
                    const AfcOptions& options = {});

void write_rejections(const std::vector<RejectedRecord>& rejected, const std::filesystem::path& path);

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance by the spherical law of cosines, in km. Throws
/// ParameterError for |lat| > 90 or |lon| > 180.
double city_center_distance(double lat, double lon, double lat0, double lon0);

}  // namespace mgcrnn
