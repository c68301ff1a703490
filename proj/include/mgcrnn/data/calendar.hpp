#pragma once

#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

namespace mgcrnn {

using Date = std::chrono::year_month_day;

/// "YYYY-MM-DD"; throws DataError on anything else or an invalid date.
Date parse_date(std::string_view text);
std::string format_date(Date d);
Date add_days(Date d, int days);
/// ISO weekday, Monday = 1 … Sunday = 7.
int iso_weekday(Date d);

/// One ISO date per line; blank lines and lines starting with '#' are skipped.
std::set<Date> read_holidays(const std::filesystem::path& path);
void write_holidays(const std::set<Date>& days, const std::filesystem::path& path);

}  // namespace mgcrnn
