#include "cpt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <set>

#include <json.hpp>

#include "cpt/binary_io.hpp"
#include "cpt/dates.hpp"
#include "cpt/errors.hpp"
#include "cpt/math_util.hpp"

namespace cpt {

namespace {

constexpr char kGridMagic[] = "CPTGRID1";

void check_strictly_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw data_error(std::string(what) + " axis must be strictly increasing");
}

void check_same_grid(const GridTimeSeries& a, const GridTimeSeries& b, const char* what) {
  if (a.times != b.times || a.lat != b.lat || a.lon != b.lon || a.mask != b.mask)
    throw data_error(std::string(what) + ": fields are on different grids");
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void GridTimeSeries::validate() const {
  if (times.empty() || lat.empty() || lon.empty()) throw data_error("grid: empty axis");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1]) throw data_error("grid: times must be strictly increasing");
  check_strictly_increasing(lat, "lat");
  check_strictly_increasing(lon, "lon");
  if (mask.size() != std::size_t(n_lat()) * std::size_t(n_lon()))
    throw data_error("grid: mask size mismatch");
  if (values.size() != std::size_t(n_times()) * std::size_t(n_lat()) * std::size_t(n_lon()))
    throw data_error("grid: values size mismatch");
  if (unit.empty()) throw data_error("grid: missing unit tag");
  for (int i = 0; i < n_lat(); ++i)
    for (int j = 0; j < n_lon(); ++j) {
      if (!masked_in(i, j)) continue;
      for (int t = 0; t < n_times(); ++t)
        if (!std::isfinite(at(t, i, j)))
          throw data_error("grid: non-finite value on a masked-in cell");
    }
}

GridTimeSeries GridTimeSeries::make(std::vector<std::int64_t> times, std::vector<double> lat,
                                    std::vector<double> lon, std::string unit) {
  GridTimeSeries g;
  g.times = std::move(times);
  g.lat = std::move(lat);
  g.lon = std::move(lon);
  g.unit = std::move(unit);
  g.mask.assign(g.lat.size() * g.lon.size(), 1);
  g.values.assign(g.times.size() * g.lat.size() * g.lon.size(), 0.0);
  return g;
}

bool FieldSet::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const GridTimeSeries& FieldSet::field(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return fields[i];
  throw data_error("fieldset: no field named '" + name + "'");
}

GridTimeSeries& FieldSet::field(const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return fields[i];
  throw data_error("fieldset: no field named '" + name + "'");
}

void FieldSet::add(std::string name, GridTimeSeries f) {
  if (has(name)) throw data_error("fieldset: duplicate field '" + name + "'");
  names.push_back(std::move(name));
  fields.push_back(std::move(f));
}

void FieldSet::validate() const {
  if (names.size() != fields.size()) throw data_error("fieldset: names/fields mismatch");
  if (fields.empty()) throw data_error("fieldset: empty");
  for (const auto& f : fields) f.validate();
  for (std::size_t i = 1; i < fields.size(); ++i)
    check_same_grid(fields[0], fields[i], "fieldset");
}

// ---- natural cubic spline ----

CubicSpline1D::CubicSpline1D(std::span<const double> x, std::span<const double> f) {
  const std::size_t n = x.size();
  if (n < 2 || f.size() != n) throw data_error("spline: need at least two knots");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x[i] > x[i - 1])) throw data_error("spline: knots must be strictly increasing");
  x_.assign(x.begin(), x.end());
  f_.assign(f.begin(), f.end());
  m_.assign(n, 0.0);
  if (n == 2) return;  // natural spline through two points is the chord

  // Thomas solve of the tridiagonal system for interior second derivatives.
  const std::size_t k = n - 2;
  std::vector<double> diag(k), rhs(k), upper(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double h0 = x_[i + 1] - x_[i];
    const double h1 = x_[i + 2] - x_[i + 1];
    diag[i] = 2.0 * (h0 + h1);
    if (i + 1 < k) upper[i] = h1;
    rhs[i] = 6.0 * ((f_[i + 2] - f_[i + 1]) / h1 - (f_[i + 1] - f_[i]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double lower = x_[i + 1] - x_[i];  // h_i, the sub-diagonal entry
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i >= 1; --i) m_[i] = (rhs[i - 1] - upper[i - 1] * m_[i + 1]) / diag[i - 1];
}

double CubicSpline1D::operator()(double u) const {
  if (u < x_.front() || u > x_.back())
    throw domain_error("spline: evaluation outside the knot range (extrapolation)");
  std::size_t i = std::size_t(std::upper_bound(x_.begin(), x_.end(), u) - x_.begin());
  i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
  const double h = x_[i + 1] - x_[i];
  const double t = u - x_[i];
  return f_[i] + t * ((f_[i + 1] - f_[i]) / h - h / 6.0 * (2.0 * m_[i] + m_[i + 1])) +
         t * t * m_[i] / 2.0 + t * t * t * (m_[i + 1] - m_[i]) / (6.0 * h);
}

GridTimeSeries regrid_spline(const GridTimeSeries& coarse, const std::vector<double>& fine_lat,
                             const std::vector<double>& fine_lon) {
  coarse.validate();
  check_strictly_increasing(fine_lat, "fine lat");
  check_strictly_increasing(fine_lon, "fine lon");
  if (fine_lat.empty() || fine_lon.empty()) throw data_error("regrid: empty fine axes");
  if (fine_lat.front() < coarse.lat.front() || fine_lat.back() > coarse.lat.back() ||
      fine_lon.front() < coarse.lon.front() || fine_lon.back() > coarse.lon.back())
    throw domain_error("regrid: fine axes extend outside the coarse bounding box");

  const int hc = coarse.n_lat(), wc = coarse.n_lon();
  const int hf = int(fine_lat.size()), wf = int(fine_lon.size());
  GridTimeSeries out = GridTimeSeries::make(coarse.times, fine_lat, fine_lon, coarse.unit);

  std::vector<double> row(static_cast<std::size_t>(wc));
  std::vector<double> tmp(std::size_t(hc) * std::size_t(wf));
  std::vector<double> col(static_cast<std::size_t>(hc));
  for (int t = 0; t < coarse.n_times(); ++t) {
    for (int i = 0; i < hc; ++i) {
      for (int j = 0; j < wc; ++j) row[std::size_t(j)] = coarse.at(t, i, j);
      const CubicSpline1D s(coarse.lon, row);
      for (int j = 0; j < wf; ++j) tmp[std::size_t(i * wf + j)] = s(fine_lon[std::size_t(j)]);
    }
    for (int j = 0; j < wf; ++j) {
      for (int i = 0; i < hc; ++i) col[std::size_t(i)] = tmp[std::size_t(i * wf + j)];
      const CubicSpline1D s(coarse.lat, col);
      for (int i = 0; i < hf; ++i) out.at(t, i, j) = s(fine_lat[std::size_t(i)]);
    }
  }
  return out;
}

GridTimeSeries daily_mean(const GridTimeSeries& x) {
  x.validate();
  // Group consecutive times by day; every day must carry the same slot count.
  std::vector<std::int64_t> days;
  std::vector<int> counts;
  for (std::int64_t t : x.times) {
    const std::int64_t d = day_of_second(t);
    if (days.empty() || days.back() != d) {
      days.push_back(d);
      counts.push_back(1);
    } else {
      ++counts.back();
    }
  }
  const int slots = counts.front();
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] != slots)
      throw data_error("daily_mean: day " + format_iso_date(days[i]) + " has " +
                       std::to_string(counts[i]) + " slots, expected " + std::to_string(slots));

  std::vector<std::int64_t> out_times(days.size());
  for (std::size_t i = 0; i < days.size(); ++i) out_times[i] = days[i] * kSecondsPerDay;
  GridTimeSeries out = GridTimeSeries::make(out_times, x.lat, x.lon, x.unit);
  out.mask = x.mask;
  const int cells = x.n_lat() * x.n_lon();
  for (std::size_t d = 0; d < days.size(); ++d)
    for (int c = 0; c < cells; ++c) {
      double acc = 0.0;
      for (int s = 0; s < slots; ++s)
        acc += x.values[std::size_t((int(d) * slots + s) * cells + c)];
      out.values[d * std::size_t(cells) + std::size_t(c)] = acc / slots;
    }
  return out;
}

GridTimeSeries wind_speed(const GridTimeSeries& u, const GridTimeSeries& v) {
  u.validate();
  v.validate();
  check_same_grid(u, v, "wind_speed");
  GridTimeSeries out = u;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = std::hypot(u.values[i], v.values[i]);
  return out;
}

GridTimeSeries advection_magnitude(const GridTimeSeries& u, const GridTimeSeries& v,
                                   const GridTimeSeries& a, const GradientMetric& metric) {
  u.validate();
  v.validate();
  a.validate();
  check_same_grid(u, v, "advection");
  check_same_grid(u, a, "advection");
  if (a.n_lat() < 3 || a.n_lon() < 3)
    throw data_error("advection: need at least 3 points per axis for central differences");

  const double deg2m_y = metric.equirectangular ? kPi / 180.0 * metric.earth_radius_m : 1.0;
  GridTimeSeries out = GridTimeSeries::make(a.times, a.lat, a.lon, "derived");
  out.mask = a.mask;
  const int h = a.n_lat(), w = a.n_lon();
  for (int t = 0; t < a.n_times(); ++t)
    for (int i = 0; i < h; ++i) {
      const double deg2m_x = metric.equirectangular
                                 ? kPi / 180.0 * metric.earth_radius_m *
                                       std::cos(a.lat[std::size_t(i)] * kPi / 180.0)
                                 : 1.0;
      for (int j = 0; j < w; ++j) {
        const int j0 = j == 0 ? 0 : j - 1;
        const int j1 = j == w - 1 ? w - 1 : j + 1;
        const double dx = (a.lon[std::size_t(j1)] - a.lon[std::size_t(j0)]) * deg2m_x;
        const double dadx = (a.at(t, i, j1) - a.at(t, i, j0)) / dx;

        const int i0 = i == 0 ? 0 : i - 1;
        const int i1 = i == h - 1 ? h - 1 : i + 1;
        const double dy = (a.lat[std::size_t(i1)] - a.lat[std::size_t(i0)]) * deg2m_y;
        const double dady = (a.at(t, i1, j) - a.at(t, i0, j)) / dy;

        out.at(t, i, j) = std::hypot(u.at(t, i, j) * dadx, v.at(t, i, j) * dady);
      }
    }
  return out;
}

GridTimeSeries boxcar_smooth(const GridTimeSeries& x, int half_width) {
  x.validate();
  if (half_width < 0) throw config_error("boxcar_smooth: negative half width");
  if (half_width == 0) return x;
  GridTimeSeries out = x;
  const int h = x.n_lat(), w = x.n_lon();
  for (int t = 0; t < x.n_times(); ++t)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double acc = 0.0;
        int n = 0;
        for (int di = -half_width; di <= half_width; ++di)
          for (int dj = -half_width; dj <= half_width; ++dj) {
            const int ii = i + di, jj = j + dj;
            if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
            acc += x.at(t, ii, jj);
            ++n;
          }
        out.at(t, i, j) = acc / n;
      }
  return out;
}

std::map<std::string, FieldStats> standardize(FieldSet& fs) {
  fs.validate();
  std::map<std::string, FieldStats> stats;
  for (std::size_t fi = 0; fi < fs.fields.size(); ++fi) {
    GridTimeSeries& f = fs.fields[fi];
    double acc = 0.0;
    long long n = 0;
    for (int i = 0; i < f.n_lat(); ++i)
      for (int j = 0; j < f.n_lon(); ++j) {
        if (!f.masked_in(i, j)) continue;
        for (int t = 0; t < f.n_times(); ++t) {
          acc += f.at(t, i, j);
          ++n;
        }
      }
    if (n == 0) throw data_error("standardize: no masked-in cells in '" + fs.names[fi] + "'");
    const double mean = acc / double(n);
    double ss = 0.0;
    for (int i = 0; i < f.n_lat(); ++i)
      for (int j = 0; j < f.n_lon(); ++j) {
        if (!f.masked_in(i, j)) continue;
        for (int t = 0; t < f.n_times(); ++t) {
          const double d = f.at(t, i, j) - mean;
          ss += d * d;
        }
      }
    const double sd = std::sqrt(ss / double(n));
    if (!(sd > 0.0))
      throw data_error("standardize: field '" + fs.names[fi] + "' is constant");
    stats[fs.names[fi]] = {mean, sd};
  }
  apply_standardization(fs, stats);
  return stats;
}

void apply_standardization(FieldSet& fs, const std::map<std::string, FieldStats>& stats) {
  for (std::size_t fi = 0; fi < fs.fields.size(); ++fi) {
    const auto it = stats.find(fs.names[fi]);
    if (it == stats.end())
      throw data_error("apply_standardization: no statistics for '" + fs.names[fi] + "'");
    GridTimeSeries& f = fs.fields[fi];
    for (double& v : f.values) v = (v - it->second.mean) / it->second.sd;
    f.unit = "standardized";
  }
}

std::string field_stats_json(const std::map<std::string, FieldStats>& stats) {
  nlohmann::json j;
  j["schema_version"] = 1;
  for (const auto& [name, s] : stats) j["fields"][name] = {{"mean", s.mean}, {"sd", s.sd}};
  return j.dump(2);
}

std::map<std::string, FieldStats> parse_field_stats_json(const std::string& text) {
  std::map<std::string, FieldStats> stats;
  const nlohmann::json j = nlohmann::json::parse(text);
  for (const auto& [name, s] : j.at("fields").items())
    stats[name] = {s.at("mean").get<double>(), s.at("sd").get<double>()};
  return stats;
}

// ---- CPT-grid binary ----

void write_cpt_grid(const std::string& path, const FieldSet& fs) {
  fs.validate();
  const GridTimeSeries& g0 = fs.fields.front();
  nlohmann::json hdr;
  hdr["version"] = 1;
  hdr["endian"] = "little";
  hdr["times"] = g0.times;
  hdr["lat"] = g0.lat;
  hdr["lon"] = g0.lon;
  hdr["mask"] = g0.mask;
  auto& jf = hdr["fields"];
  for (std::size_t i = 0; i < fs.names.size(); ++i)
    jf.push_back({{"name", fs.names[i]}, {"unit", fs.fields[i].unit}});

  ByteWriter w;
  w.put_string(hdr.dump());
  for (const auto& f : fs.fields) w.put_f64_span(f.values);

  ByteWriter file;
  file.put_bytes(std::string_view(kGridMagic, 8));
  const std::string body = w.take();
  file.put_bytes(body);
  file.put_u32(crc32(body));
  write_file(path, file.bytes());
}

FieldSet read_cpt_grid(const std::string& path) {
  const std::string raw = read_file(path);
  if (raw.size() < 12 || std::string_view(raw).substr(0, 8) != std::string_view(kGridMagic, 8))
    throw data_error("cpt-grid: bad magic in " + path);
  const std::string_view body(raw.data() + 8, raw.size() - 12);
  ByteReader tail(std::string_view(raw.data() + raw.size() - 4, 4));
  if (crc32(body) != tail.get_u32()) throw data_error("cpt-grid: checksum mismatch in " + path);

  ByteReader r(body);
  nlohmann::json hdr;
  try {
    hdr = nlohmann::json::parse(r.get_string());
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("cpt-grid: malformed header: ") + e.what());
  }
  if (hdr.at("version").get<int>() != 1) throw data_error("cpt-grid: unsupported version");
  if (hdr.at("endian").get<std::string>() != "little")
    throw data_error("cpt-grid: unsupported byte order");

  FieldSet fs;
  const auto times = hdr.at("times").get<std::vector<std::int64_t>>();
  const auto lat = hdr.at("lat").get<std::vector<double>>();
  const auto lon = hdr.at("lon").get<std::vector<double>>();
  const auto mask = hdr.at("mask").get<std::vector<std::uint8_t>>();
  const std::size_t cell_count = times.size() * lat.size() * lon.size();
  for (const auto& jf : hdr.at("fields")) {
    GridTimeSeries g;
    g.times = times;
    g.lat = lat;
    g.lon = lon;
    g.mask = mask;
    g.unit = jf.at("unit").get<std::string>();
    g.values = r.get_f64_vector(cell_count);
    fs.add(jf.at("name").get<std::string>(), std::move(g));
  }
  if (!r.exhausted()) throw data_error("cpt-grid: trailing bytes");
  fs.validate();
  return fs;
}

// ---- long-format CSV ----

void write_long_csv(const std::string& path, const FieldSet& fs) {
  fs.validate();
  std::string out = "time,lat,lon,field,value\n";
  for (std::size_t fi = 0; fi < fs.fields.size(); ++fi) {
    const GridTimeSeries& f = fs.fields[fi];
    for (int t = 0; t < f.n_times(); ++t) {
      const std::string ts = format_iso_datetime(f.times[std::size_t(t)]);
      for (int i = 0; i < f.n_lat(); ++i)
        for (int j = 0; j < f.n_lon(); ++j) {
          out += ts;
          out += ',';
          out += fmt_double(f.lat[std::size_t(i)]);
          out += ',';
          out += fmt_double(f.lon[std::size_t(j)]);
          out += ',';
          out += fs.names[fi];
          out += ',';
          out += fmt_double(f.at(t, i, j));
          out += '\n';
        }
    }
  }
  write_file(path, out);
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(const std::string& s, long long line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw data_error("csv: bad number '" + s + "' at line " + std::to_string(line_no));
  return v;
}

}  // namespace

FieldSet read_long_csv(const std::string& path) {
  const std::string raw = read_file(path);

  struct Rec {
    std::int64_t time;
    double lat, lon, value;
  };
  std::map<std::string, std::vector<Rec>> recs;
  std::vector<std::string> field_order;
  std::set<std::int64_t> time_set;
  std::set<double> lat_set, lon_set;

  std::size_t pos = 0;
  long long line_no = 0;
  while (pos < raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    if (eol == std::string::npos) eol = raw.size();
    std::string line = raw.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "time,lat,lon,field,value")
        throw data_error("csv: unexpected header '" + line + "' at line 1");
      continue;
    }
    const auto cells = split_csv_row(line);
    if (cells.size() != 5)
      throw data_error("csv: expected 5 columns at line " + std::to_string(line_no));
    Rec rec;
    try {
      rec.time = parse_iso_datetime(cells[0]);
    } catch (const data_error&) {
      throw data_error("csv: bad time '" + cells[0] + "' at line " + std::to_string(line_no));
    }
    rec.lat = parse_double(cells[1], line_no);
    rec.lon = parse_double(cells[2], line_no);
    rec.value = parse_double(cells[4], line_no);
    if (cells[3].empty()) throw data_error("csv: empty field name at line " + std::to_string(line_no));
    if (recs.find(cells[3]) == recs.end()) field_order.push_back(cells[3]);
    recs[cells[3]].push_back(rec);
    time_set.insert(rec.time);
    lat_set.insert(rec.lat);
    lon_set.insert(rec.lon);
  }
  if (recs.empty()) throw data_error("csv: no data rows in " + path);

  const std::vector<std::int64_t> times(time_set.begin(), time_set.end());
  const std::vector<double> lat(lat_set.begin(), lat_set.end());
  const std::vector<double> lon(lon_set.begin(), lon_set.end());
  auto index_of = [](const auto& axis, auto v, const char* what) {
    const auto it = std::lower_bound(axis.begin(), axis.end(), v);
    if (it == axis.end() || *it != v) throw data_error(std::string("csv: unknown ") + what);
    return int(it - axis.begin());
  };

  FieldSet fs;
  const std::size_t expect = times.size() * lat.size() * lon.size();
  for (const auto& name : field_order) {
    const auto& rows = recs[name];
    if (rows.size() != expect)
      throw data_error("csv: field '" + name + "' has " + std::to_string(rows.size()) +
                       " rows, expected " + std::to_string(expect) +
                       " (every time/lat/lon combination exactly once)");
    GridTimeSeries g = GridTimeSeries::make(times, lat, lon, "unknown");
    std::vector<std::uint8_t> seen(expect, 0);
    for (const Rec& rec : rows) {
      const int t = index_of(times, rec.time, "time");
      const int i = index_of(lat, rec.lat, "lat");
      const int j = index_of(lon, rec.lon, "lon");
      const std::size_t flat = std::size_t((t * int(lat.size()) + i) * int(lon.size()) + j);
      if (seen[flat]) throw data_error("csv: duplicate cell in field '" + name + "'");
      seen[flat] = 1;
      g.values[flat] = rec.value;
    }
    fs.add(name, std::move(g));
  }
  return fs;
}

}  // namespace cpt
