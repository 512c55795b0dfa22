#include "cpt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cpt/errors.hpp"

namespace cpt {

namespace {

void check_aligned(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size() || a.empty())
    throw data_error(std::string(what) + ": series must be non-empty and aligned");
}

}  // namespace

double mab(std::span<const double> forecast, std::span<const double> observed) {
  check_aligned(forecast, observed, "mab");
  double acc = 0.0;
  for (std::size_t i = 0; i < forecast.size(); ++i) acc += std::abs(forecast[i] - observed[i]);
  return acc / double(forecast.size());
}

double rmsb(std::span<const double> forecast, std::span<const double> observed) {
  check_aligned(forecast, observed, "rmsb");
  double acc = 0.0;
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    const double d = forecast[i] - observed[i];
    acc += d * d;
  }
  return std::sqrt(acc / double(forecast.size()));
}

DaySpreadError day_spread_error(std::span<const double> members, double observed) {
  if (members.empty()) throw data_error("day_spread_error: empty ensemble");
  std::vector<double> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double spread2 = 0.0;
  for (double m : members) spread2 += (m - median) * (m - median);
  spread2 /= double(n);
  const double b = median - observed;
  return {spread2, b * b};
}

std::vector<SpreadSkillBin> spread_skill(std::span<const double> spread2,
                                         std::span<const double> error2, int n_bins) {
  check_aligned(spread2, error2, "spread_skill");
  if (n_bins < 1) throw config_error("spread_skill: n_bins must be >= 1");
  const std::size_t n = spread2.size();
  if (n < std::size_t(n_bins)) throw data_error("spread_skill: fewer days than bins");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return spread2[a] < spread2[b]; });

  const std::size_t base = n / std::size_t(n_bins);
  const std::size_t remainder = n % std::size_t(n_bins);
  std::vector<SpreadSkillBin> bins;
  bins.reserve(std::size_t(n_bins));
  std::size_t at = 0;
  for (int b = 0; b < n_bins; ++b) {
    const std::size_t size = base + (std::size_t(b) < remainder ? 1 : 0);
    double s = 0.0, e = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
      s += spread2[order[at + k]];
      e += error2[order[at + k]];
    }
    at += size;
    bins.push_back({std::sqrt(s / double(size)), std::sqrt(e / double(size)), (long long)(size)});
  }
  return bins;
}

RocCurve roc(std::span<const double> prob, std::span<const std::uint8_t> event) {
  if (prob.size() != event.size() || prob.empty())
    throw data_error("roc: series must be non-empty and aligned");

  RocCurve out;
  for (std::uint8_t e : event) (e ? out.n_events : out.n_non_events) += 1;
  if (out.n_events == 0 || out.n_non_events == 0)
    throw data_error("roc: need at least one event and one non-event");

  // Sweep thresholds over the distinct forecast probabilities plus {0, 1};
  // positive when prob >= threshold, so start above every probability.
  std::vector<double> thresholds(prob.begin(), prob.end());
  thresholds.push_back(0.0);
  thresholds.push_back(1.0);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  out.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (double th : thresholds) {
    long long tp = 0, fp = 0;
    for (std::size_t i = 0; i < prob.size(); ++i)
      if (prob[i] >= th) (event[i] ? tp : fp) += 1;
    out.points.push_back(
        {th, double(fp) / double(out.n_non_events), double(tp) / double(out.n_events)});
  }

  for (std::size_t i = 1; i < out.points.size(); ++i) {
    const auto& a = out.points[i - 1];
    const auto& b = out.points[i];
    out.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return out;
}

std::vector<double> exceedance_curve(std::span<const double> series,
                                     std::span<const double> x_grid) {
  if (series.empty()) throw data_error("exceedance_curve: empty series");
  std::vector<double> out;
  out.reserve(x_grid.size());
  for (double x : x_grid) {
    long long above = 0;
    for (double v : series)
      if (v > x) ++above;
    out.push_back(double(above) / double(series.size()));
  }
  return out;
}

std::vector<double> event_base_rates(std::span<const double> observed,
                                     std::span<const double> thresholds) {
  return exceedance_curve(observed, thresholds);
}

Eigen::MatrixXd cross_correlation_map(const GridTimeSeries& g, int ref_i, int ref_j) {
  g.validate();
  if (ref_i < 0 || ref_i >= g.n_lat() || ref_j < 0 || ref_j >= g.n_lon() ||
      !g.masked_in(ref_i, ref_j))
    throw data_error("cross_correlation_map: reference cell outside the mask");

  const int t_total = g.n_times();
  Eigen::VectorXd ref(t_total);
  for (int t = 0; t < t_total; ++t) ref[t] = g.at(t, ref_i, ref_j);
  const double ref_mean = ref.mean();
  const double ref_ss = (ref.array() - ref_mean).square().sum();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(g.n_lat(), g.n_lon(), nan);
  for (int i = 0; i < g.n_lat(); ++i)
    for (int j = 0; j < g.n_lon(); ++j) {
      if (!g.masked_in(i, j)) continue;
      double mean = 0.0;
      for (int t = 0; t < t_total; ++t) mean += g.at(t, i, j);
      mean /= t_total;
      double ss = 0.0, cross = 0.0;
      for (int t = 0; t < t_total; ++t) {
        const double d = g.at(t, i, j) - mean;
        ss += d * d;
        cross += d * (ref[t] - ref_mean);
      }
      if (ss > 0.0 && ref_ss > 0.0) out(i, j) = cross / std::sqrt(ss * ref_ss);
    }
  return out;
}

std::pair<int, int> mask_center_of_mass(const GridTimeSeries& g) {
  double ci = 0.0, cj = 0.0;
  long long n = 0;
  for (int i = 0; i < g.n_lat(); ++i)
    for (int j = 0; j < g.n_lon(); ++j)
      if (g.masked_in(i, j)) {
        ci += i;
        cj += j;
        ++n;
      }
  if (n == 0) throw data_error("mask_center_of_mass: empty mask");
  ci /= double(n);
  cj /= double(n);

  int best_i = -1, best_j = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.n_lat(); ++i)
    for (int j = 0; j < g.n_lon(); ++j) {
      if (!g.masked_in(i, j)) continue;
      const double d = (i - ci) * (i - ci) + (j - cj) * (j - cj);
      if (d < best) {
        best = d;
        best_i = i;
        best_j = j;
      }
    }
  return {best_i, best_j};
}

long long Histogram2d::total() const {
  long long t = 0;
  for (long long c : counts) t += c;
  return t;
}

Histogram2d log_density_heatmap(std::span<const double> forecast,
                                std::span<const double> observed, int n_bins) {
  check_aligned(forecast, observed, "log_density_heatmap");
  if (n_bins < 1) throw config_error("log_density_heatmap: n_bins must be >= 1");

  Histogram2d h;
  h.n_bins = n_bins;
  h.lo = 0.0;
  double hi = 0.0;
  for (double v : forecast) hi = std::max(hi, std::log1p(v));
  for (double v : observed) hi = std::max(hi, std::log1p(v));
  h.hi = hi > 0.0 ? hi : 1.0;  // all-zero series still get a well-formed grid
  h.counts.assign(std::size_t(n_bins) * std::size_t(n_bins), 0);

  auto bin_of = [&](double v) {
    const double u = std::log1p(v);
    int b = int(std::floor((u - h.lo) / (h.hi - h.lo) * n_bins));
    return std::clamp(b, 0, n_bins - 1);  // top edge lands in the last bin
  };
  for (std::size_t i = 0; i < forecast.size(); ++i)
    ++h.counts[std::size_t(bin_of(forecast[i]) * n_bins + bin_of(observed[i]))];
  return h;
}

}  // namespace cpt
