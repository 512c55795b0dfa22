#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpt/errors.hpp"
#include "cpt/evaluation.hpp"
#include "cpt/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace cpt;

TEST_CASE("bias metrics") {
  SUBCASE("perfect forecasts have zero bias") {
    const std::vector<double> s{0.0, 1.0, 7.5, 2.0};
    CHECK(mab(s, s) == 0.0);
    CHECK(rmsb(s, s) == 0.0);
  }
  SUBCASE("two-point hand case") {
    const std::vector<double> obs{0.0, 2.0}, med{1.0, 1.0};
    CHECK(mab(med, obs) == doctest::Approx(1.0));
    CHECK(rmsb(med, obs) == doctest::Approx(1.0));
  }
  SUBCASE("rmsb dominates mab on random instances") {
    Rng rng(71);
    for (int rep = 0; rep < 1000; ++rep) {
      const int n = 2 + rng.poisson(20.0);
      std::vector<double> f(static_cast<std::size_t>(n)), o(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        f[std::size_t(i)] = std::abs(rng.normal(2.0, 3.0));
        o[std::size_t(i)] = std::abs(rng.normal(2.0, 3.0));
      }
      CHECK(rmsb(f, o) >= mab(f, o) - 1e-12);
    }
  }
  SUBCASE("permutation invariance over days") {
    const std::vector<double> f{1.0, 2.0, 3.0}, o{0.5, 2.5, 2.0};
    const std::vector<double> fp{3.0, 1.0, 2.0}, op{2.0, 0.5, 2.5};
    CHECK(mab(f, o) == doctest::Approx(mab(fp, op)));
    CHECK(rmsb(f, o) == doctest::Approx(rmsb(fp, op)));
  }
}

TEST_CASE("spread-skill binning") {
  SUBCASE("zero-spread perfect forecasts give all-zero bins") {
    const std::vector<double> z(64, 0.0);
    for (const auto& b : spread_skill(z, z, 16)) {
      CHECK(b.rms_spread == 0.0);
      CHECK(b.rms_error == 0.0);
    }
  }
  SUBCASE("bin populations differ by at most one") {
    Rng rng(73);
    std::vector<double> s(1003), e(1003);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = rng.uniform();
      e[i] = rng.uniform();
    }
    const auto bins = spread_skill(s, e, 16);
    long long lo = 1 << 30, hi = 0, total = 0;
    for (const auto& b : bins) {
      lo = std::min(lo, b.n_days);
      hi = std::max(hi, b.n_days);
      total += b.n_days;
    }
    CHECK(hi - lo <= 1);
    CHECK(total == 1003);
  }
  SUBCASE("calibrated Gaussian ensembles sit on the diagonal within 10%") {
    // The spread is median-centered, which biases it low by O(1/M); a large
    // ensemble keeps that bias inside the asserted band.
    Rng rng(75);
    const int n_days = 10000, m = 200;
    std::vector<double> spread2(n_days), error2(n_days);
    std::vector<double> members(m);
    for (int t = 0; t < n_days; ++t) {
      const double mu = rng.normal(5.0, 2.0);
      const double sigma = 0.5 + 1.5 * rng.uniform();
      for (int k = 0; k < m; ++k) members[std::size_t(k)] = rng.normal(mu, sigma);
      const double obs = rng.normal(mu, sigma);  // same law as the members
      const DaySpreadError d = day_spread_error(members, obs);
      spread2[std::size_t(t)] = d.spread2;
      error2[std::size_t(t)] = d.error2;
    }
    for (const auto& b : spread_skill(spread2, error2, 16))
      CHECK(std::abs(b.rms_error / b.rms_spread - 1.0) < 0.10);
  }
  SUBCASE("day spread and error definitions") {
    const std::vector<double> members{1.0, 2.0, 3.0};
    const DaySpreadError d = day_spread_error(members, 1.0);
    CHECK(d.error2 == doctest::Approx(1.0));                      // (median 2 - obs 1)^2
    CHECK(d.spread2 == doctest::Approx((1.0 + 0.0 + 1.0) / 3.0));  // around the median
  }
}

TEST_CASE("roc curves and auc") {
  SUBCASE("perfect separation") {
    const std::vector<double> p{0.9, 0.8, 0.3, 0.1};
    const std::vector<std::uint8_t> e{1, 1, 0, 0};
    const RocCurve c = roc(p, e);
    CHECK(c.auc == doctest::Approx(1.0));
  }
  SUBCASE("one swapped label costs one quarter") {
    const std::vector<double> p{0.9, 0.8, 0.3, 0.1};
    const std::vector<std::uint8_t> e{1, 0, 1, 0};
    CHECK(roc(p, e).auc == doctest::Approx(0.75));
  }
  SUBCASE("uninformative forecasts score one half") {
    Rng rng(77);
    const int n = 10000;
    std::vector<double> p(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> e(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      p[std::size_t(i)] = rng.uniform();
      e[std::size_t(i)] = rng.uniform() < 0.3 ? 1 : 0;
    }
    CHECK(std::abs(roc(p, e).auc - 0.5) < 0.02);
  }
  SUBCASE("trapezoid AUC equals the rank statistic, ties included") {
    Rng rng(79);
    for (int rep = 0; rep < 30; ++rep) {
      const int n = 20 + rep * 6;  // up to 200 days
      std::vector<double> p(static_cast<std::size_t>(n));
      std::vector<std::uint8_t> e(static_cast<std::size_t>(n));
      bool has0 = false, has1 = false;
      for (int i = 0; i < n; ++i) {
        p[std::size_t(i)] = std::round(rng.uniform() * 20.0) / 20.0;  // tie-rich
        e[std::size_t(i)] = rng.uniform() < 0.4 ? 1 : 0;
        (e[std::size_t(i)] ? has1 : has0) = true;
      }
      if (!has0 || !has1) continue;
      CHECK(roc(p, e).auc ==
            doctest::Approx(oracles::auc_rank_brute(p, e)).epsilon(1e-12));
    }
  }
  SUBCASE("self-evaluation with indicator probabilities is perfect") {
    const std::vector<double> obs{0.0, 3.0, 12.0, 0.5, 30.0};
    std::vector<double> p;
    std::vector<std::uint8_t> e;
    for (double y : obs) {
      p.push_back(y > 5.0 ? 1.0 : 0.0);
      e.push_back(y > 5.0 ? 1 : 0);
    }
    CHECK(roc(p, e).auc == doctest::Approx(1.0));
  }
  SUBCASE("degenerate labels are refused") {
    const std::vector<double> p{0.1, 0.9};
    const std::vector<std::uint8_t> all1{1, 1}, all0{0, 0};
    CHECK_THROWS_AS(roc(p, all1), data_error);
    CHECK_THROWS_AS(roc(p, all0), data_error);
  }
}

TEST_CASE("exceedance curves") {
  const std::vector<double> xg{0.0, 1.0, 4.9, 5.0, 5.1};
  SUBCASE("all-dry series") {
    const std::vector<double> s(10, 0.0);
    for (double v : exceedance_curve(s, xg)) CHECK(v == 0.0);
  }
  SUBCASE("a single 5 mm value steps at 5") {
    const std::vector<double> s{5.0};
    const auto c = exceedance_curve(s, xg);
    CHECK(c[0] == 1.0);
    CHECK(c[2] == 1.0);  // 5 > 4.9
    CHECK(c[3] == 0.0);  // strictly greater
  }
  SUBCASE("pooled members equal the average of member curves") {
    Rng rng(81);
    const int m = 7, t = 40;
    std::vector<std::vector<double>> per_member(m);
    std::vector<double> pooled;
    for (int k = 0; k < m; ++k)
      for (int i = 0; i < t; ++i) {
        const double v = rng.uniform() < 0.4 ? 0.0 : rng.gamma(2.0, 0.3);
        per_member[std::size_t(k)].push_back(v);
        pooled.push_back(v);
      }
    const auto cp = exceedance_curve(pooled, xg);
    for (std::size_t xk = 0; xk < xg.size(); ++xk) {
      double avg = 0.0;
      for (int k = 0; k < m; ++k) avg += exceedance_curve(per_member[std::size_t(k)], xg)[xk];
      CHECK(cp[xk] == doctest::Approx(avg / m).epsilon(1e-12));
    }
  }
  SUBCASE("monotone non-increasing") {
    Rng rng(83);
    std::vector<double> s(200);
    for (auto& v : s) v = rng.gamma(1.5, 0.2);
    const auto c = exceedance_curve(s, xg);
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k] <= c[k - 1]);
  }
}

TEST_CASE("event base rates") {
  const std::vector<double> th{5.0, 15.0, 25.0};
  SUBCASE("all dry") {
    const std::vector<double> obs(20, 0.0);
    for (double r : event_base_rates(obs, th)) CHECK(r == 0.0);
  }
  SUBCASE("constructed exceedance counts") {
    std::vector<double> obs(100, 0.0);
    for (int i = 0; i < 22; ++i) obs[std::size_t(i)] = 10.0;
    for (int i = 0; i < 3; ++i) obs[std::size_t(i)] = 20.0;
    obs[99] = 30.0;
    const auto r = event_base_rates(obs, th);
    CHECK(r[0] == doctest::Approx(0.23));
    CHECK(r[1] == doctest::Approx(0.04));
    CHECK(r[2] == doctest::Approx(0.01));
    for (std::size_t k = 1; k < r.size(); ++k) CHECK(r[k] <= r[k - 1]);
  }
}

TEST_CASE("cross-correlation maps") {
  std::vector<std::int64_t> times;
  for (int t = 0; t < 500; ++t) times.push_back(t * 86400);
  GridTimeSeries g = GridTimeSeries::make(times, {50.0, 50.1, 50.2}, {-4.0, -3.9}, "mm");
  Rng rng(87);
  SUBCASE("independent noise decorrelates; the reference stays at one") {
    for (double& v : g.values) v = rng.normal();
    const Eigen::MatrixXd m = cross_correlation_map(g, 1, 0);
    CHECK(m(1, 0) == doctest::Approx(1.0));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        if (!(i == 1 && j == 0)) CHECK(std::abs(m(i, j)) < 4.0 / std::sqrt(500.0));
  }
  SUBCASE("a shared series correlates perfectly everywhere") {
    for (int t = 0; t < 500; ++t) {
      const double v = rng.normal();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) g.at(t, i, j) = v;
    }
    const Eigen::MatrixXd m = cross_correlation_map(g, 0, 0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) CHECK(m(i, j) == doctest::Approx(1.0));
  }
  SUBCASE("masked-out cells are NaN and refused as reference") {
    for (double& v : g.values) v = rng.normal();
    g.mask[0] = 0;
    const Eigen::MatrixXd m = cross_correlation_map(g, 1, 0);
    CHECK(std::isnan(m(0, 0)));
    CHECK_THROWS_AS(cross_correlation_map(g, 0, 0), data_error);
  }
  SUBCASE("center of mass lands on a masked-in cell") {
    g.mask.assign(g.mask.size(), 1);
    for (double& v : g.values) v = rng.normal();
    const auto [ri, rj] = mask_center_of_mass(g);
    CHECK(g.masked_in(ri, rj));
    CHECK(ri == 1);
  }
}

TEST_CASE("log-frequency heatmaps") {
  SUBCASE("identical series put all mass on the diagonal") {
    Rng rng(89);
    std::vector<double> s(300);
    for (auto& v : s) v = rng.uniform() < 0.3 ? 0.0 : rng.gamma(2.0, 0.4);
    const Histogram2d h = log_density_heatmap(s, s, 12);
    CHECK(h.total() == 300);
    for (int a = 0; a < h.n_bins; ++a)
      for (int b = 0; b < h.n_bins; ++b)
        if (a != b) CHECK(h.counts[std::size_t(a * h.n_bins + b)] == 0);
  }
  SUBCASE("counts always sum to the number of days") {
    Rng rng(91);
    std::vector<double> f(777), o(777);
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = rng.gamma(1.0, 0.2);
      o[i] = rng.gamma(1.0, 0.2);
    }
    CHECK(log_density_heatmap(f, o, 40).total() == 777);
  }
  SUBCASE("bin edges invert back to millimetres exactly") {
    const std::vector<double> f{0.0, 5.0, 60.0}, o{0.0, 7.0, 55.0};
    const Histogram2d h = log_density_heatmap(f, o, 10);
    CHECK(h.edge(0) == 0.0);
    CHECK(std::expm1(h.edge(0)) == 0.0);
    CHECK(std::expm1(h.hi) == doctest::Approx(60.0).epsilon(1e-12));
  }
}
