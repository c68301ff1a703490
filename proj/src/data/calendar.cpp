#include "mgcrnn/data/calendar.hpp"

#include <cstdio>
#include <fstream>

#include "mgcrnn/core/errors.hpp"

namespace mgcrnn {

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  const std::string s(text);
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    throw DataError("'" + s + "' is not a YYYY-MM-DD date");
  const Date out{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!out.ok()) throw DataError("'" + s + "' is not a valid calendar date");
  return out;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

Date add_days(Date d, int days) { return Date{std::chrono::sys_days{d} + std::chrono::days{days}}; }

int iso_weekday(Date d) {
  return static_cast<int>(std::chrono::weekday{std::chrono::sys_days{d}}.iso_encoding());
}

std::set<Date> read_holidays(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open holiday list '" + path.string() + "'");
  std::set<Date> out;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.insert(parse_date(line));
  }
  return out;
}

void write_holidays(const std::set<Date>& days, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const Date& d : days) out << format_date(d) << '\n';
}

}  // namespace mgcrnn
