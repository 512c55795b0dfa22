#pragma once

#include <cstdint>
#include <string>

namespace cpt {

// Daily series are indexed by epoch days (days since 1970-01-01 UTC);
// sub-daily grids by epoch seconds.

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
};

enum class Season { DJF, MAM, JJA, SON };

CivilDate civil_from_day(std::int64_t epoch_day);
std::int64_t day_from_civil(const CivilDate& d);

Season season_of_day(std::int64_t epoch_day);
const char* season_name(Season s);

/// Floor division for (possibly negative) epoch seconds.
inline std::int64_t day_of_second(std::int64_t epoch_second) {
  std::int64_t d = epoch_second / kSecondsPerDay;
  if (epoch_second % kSecondsPerDay < 0) --d;
  return d;
}

std::string format_iso_date(std::int64_t epoch_day);              // YYYY-MM-DD
std::string format_iso_datetime(std::int64_t epoch_second);       // YYYY-MM-DDThh:mm:ssZ
std::int64_t parse_iso_date(const std::string& s);                // throws data_error
std::int64_t parse_iso_datetime(const std::string& s);            // date-only accepted as midnight

}  // namespace cpt
