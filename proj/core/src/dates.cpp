#include "cpt/dates.hpp"

#include <chrono>
#include <cstdio>

#include "cpt/errors.hpp"

namespace cpt {

namespace chr = std::chrono;

CivilDate civil_from_day(std::int64_t epoch_day) {
  const chr::sys_days sd{chr::days{epoch_day}};
  const chr::year_month_day ymd{sd};
  return {int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

std::int64_t day_from_civil(const CivilDate& d) {
  const chr::year_month_day ymd{chr::year{d.year}, chr::month{d.month}, chr::day{d.day}};
  if (!ymd.ok()) throw data_error("invalid calendar date");
  return chr::sys_days{ymd}.time_since_epoch().count();
}

Season season_of_day(std::int64_t epoch_day) {
  const unsigned m = civil_from_day(epoch_day).month;
  if (m == 12 || m <= 2) return Season::DJF;
  if (m <= 5) return Season::MAM;
  if (m <= 8) return Season::JJA;
  return Season::SON;
}

const char* season_name(Season s) {
  switch (s) {
    case Season::DJF: return "DJF";
    case Season::MAM: return "MAM";
    case Season::JJA: return "JJA";
    default: return "SON";
  }
}

std::string format_iso_date(std::int64_t epoch_day) {
  const CivilDate d = civil_from_day(epoch_day);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

std::string format_iso_datetime(std::int64_t epoch_second) {
  const std::int64_t day = day_of_second(epoch_second);
  const std::int64_t rem = epoch_second - day * kSecondsPerDay;
  const CivilDate d = civil_from_day(day);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", d.year, d.month, d.day,
                int(rem / 3600), int((rem / 60) % 60), int(rem % 60));
  return buf;
}

std::int64_t parse_iso_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) != 3)
    throw data_error("cannot parse date '" + s + "' (expected YYYY-MM-DD)");
  return day_from_civil({y, m, d});
}

std::int64_t parse_iso_datetime(const std::string& s) {
  int y = 0, hh = 0, mm = 0, ss = 0;
  unsigned mo = 0, dd = 0;
  const int n = std::sscanf(s.c_str(), "%d-%u-%uT%d:%d:%d", &y, &mo, &dd, &hh, &mm, &ss);
  if (n == 3) return day_from_civil({y, mo, dd}) * kSecondsPerDay;
  if (n != 6) throw data_error("cannot parse datetime '" + s + "'");
  if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60)
    throw data_error("time of day out of range in '" + s + "'");
  return day_from_civil({y, mo, dd}) * kSecondsPerDay + hh * 3600 + mm * 60 + ss;
}

}  // namespace cpt
