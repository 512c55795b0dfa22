#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpt/compound_poisson.hpp"
#include "cpt/errors.hpp"
#include "cpt/math_util.hpp"
#include "oracles.hpp"

using namespace cpt;

namespace {

const double kGridLambda[] = {0.1, 1.0, 5.0};
const double kGridMu[] = {0.5, 2.0, 10.0};
const double kGridOmega[] = {0.2, 1.0, 3.0};
const double kGridY[] = {0.01, 0.1, 1.0, 5.0, 20.0, 100.0};

}  // namespace

TEST_CASE("zero atom carries the Poisson zero mass") {
  CHECK(cp_log_density(0.0, {2.0, 1.0, 1.0}) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(cp_log_density(0.0, {0.3, 5.0, 0.7}) == doctest::Approx(-0.3).epsilon(1e-15));
}

TEST_CASE("log density matches the brute-force series") {
  // Frozen via an independent high-precision evaluation of the same series.
  const double impl = cp_log_density(1.5, {1.0, 1.0, 1.0});
  CHECK(impl == doctest::Approx(-1.8256348894345898).epsilon(1e-12));
  CHECK(std::abs(impl - oracles::cp_log_density_brute(1.5, 1.0, 1.0, 1.0, 500)) < 1e-10);
}

TEST_CASE("log density matches brute force over the parameter grid") {
  for (double lam : kGridLambda)
    for (double mu : kGridMu)
      for (double om : kGridOmega)
        for (double y : kGridY) {
          const double impl = cp_log_density(y, {lam, mu, om});
          const double brute = oracles::cp_log_density_brute(y, lam, mu, om, 10000);
          CHECK(std::abs(impl - brute) < 1e-10);
        }
}

TEST_CASE("total probability mass is one") {
  const CpParams p{0.8, 3.0, 0.7};
  const double mass =
      oracles::cp_total_mass(p.lambda, [&](double y) { return cp_log_density(y, p); });
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("total probability mass is one across the grid") {
  for (double lam : kGridLambda)
    for (double mu : kGridMu)
      for (double om : kGridOmega) {
        const CpParams p{lam, mu, om};
        const double mass =
            oracles::cp_total_mass(lam, [&](double y) { return cp_log_density(y, p); });
        CHECK(std::abs(mass - 1.0) < 1e-6);
      }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(cp_log_density(1.0, {0.0, 1.0, 1.0}), domain_error);
  CHECK_THROWS_AS(cp_log_density(1.0, {1.0, -2.0, 1.0}), domain_error);
  CHECK_THROWS_AS(cp_log_density(1.0, {1.0, 1.0, std::nan("")}), domain_error);
  CHECK_THROWS_AS(cp_log_density(-0.5, {1.0, 1.0, 1.0}), domain_error);
}

TEST_CASE("term window contains the argmax and nearly all mass") {
  SUBCASE("tiny amounts put the mode at z = 1") {
    const TermRange r = cp_term_range(0.01, {1.0, 1.0, 1.0});
    CHECK(r.z_lo == 1);
    double best = -1e300;
    int argmax = 0;
    for (int z = 1; z <= 100; ++z) {
      const double t = oracles::cp_log_term_raw(z, 0.01, 1.0, 1.0, 1.0);
      if (t > best) {
        best = t;
        argmax = z;
      }
    }
    CHECK(argmax == 1);
    CHECK(r.z_hi >= argmax);
  }
  SUBCASE("scan-found argmax lies inside the window") {
    const TermRange r = cp_term_range(10.0, {5.0, 2.0, 0.5});
    double best = -1e300;
    int argmax = 0;
    for (int z = 1; z <= 1000; ++z) {
      const double t = oracles::cp_log_term_raw(z, 10.0, 5.0, 2.0, 0.5);
      if (t > best) {
        best = t;
        argmax = z;
      }
    }
    CHECK(r.z_lo <= argmax);
    CHECK(argmax <= r.z_hi);
  }
  SUBCASE("window mass is at least 1 - 1e-10 of the full series") {
    for (double lam : kGridLambda)
      for (double mu : kGridMu)
        for (double om : kGridOmega)
          for (double y : {0.1, 5.0}) {
            const TermRange r = cp_term_range(y, {lam, mu, om});
            std::vector<double> inside, all;
            for (int z = 1; z <= 10000; ++z) {
              const double t = oracles::cp_log_term_raw(z, y, lam, mu, om);
              all.push_back(t);
              if (z >= r.z_lo && z <= r.z_hi) inside.push_back(t);
            }
            const double frac = std::exp(oracles::log_sum_exp_raw(inside) -
                                         oracles::log_sum_exp_raw(all));
            CHECK(frac >= 1.0 - 1e-10);
          }
  }
}

TEST_CASE("window past the term cap raises series_error") {
  CHECK_THROWS_AS(cp_term_range(1.0, {1e8, 1.0, 1.0}), series_error);
  CHECK_THROWS_AS(cp_log_density(1.0, {1e8, 1.0, 1.0}), series_error);
}

TEST_CASE("sampling: degenerate rate and moment identities") {
  Rng rng(42);
  SUBCASE("lambda -> 0 gives the dry day") {
    for (int i = 0; i < 100; ++i) {
      const CpDraw d = cp_sample({1e-12, 1.0, 1.0}, rng);
      CHECK(d.z == 0);
      CHECK(d.y == 0.0);
    }
  }
  SUBCASE("mean and variance match E[Y]=lambda*mu, Var[Y]=lambda*mu^2*(1+omega)") {
    const CpParams p{1.0, 2.0, 1.0};
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
      const CpDraw d = cp_sample(p, rng);
      CHECK((d.z == 0) == (d.y == 0.0));
      sum += d.y;
      sum2 += d.y * d.y;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // standard errors: SE(mean) = sd/sqrt(n); SE(var) via fourth moment
    const double sd = std::sqrt(8.0);
    CHECK(std::abs(mean - 2.0) < 3.0 * sd / std::sqrt(double(n)));
    Rng rng2(7);
    for (int i = 0; i < 100000; ++i) {
      const CpDraw d = cp_sample(p, rng2);
      const double c = d.y - 2.0;
      sum4 += c * c * c * c;
    }
    const double m4 = sum4 / 100000;
    const double se_var = std::sqrt((m4 - 64.0) / double(n));
    CHECK(std::abs(var - 8.0) < 3.0 * se_var + 0.05);
  }
}

TEST_CASE("joint mass of (z, y): structural zeros and normalization") {
  const CpParams p{1.0, 1.0, 1.0};
  CHECK(cp_z_log_conditional(0, 0.0, p) == doctest::Approx(-1.0));
  CHECK(cp_z_log_conditional(0, 1.0, p) == kNegInf);
  CHECK(cp_z_log_conditional(3, 0.0, p) == kNegInf);
  CHECK(cp_z_log_conditional(-1, 1.0, p) == kNegInf);

  // Normalized over z the conditional reproduces the brute-force weights.
  const double y = 1.5;
  std::vector<double> impl_terms, brute_terms;
  for (int z = 1; z <= 500; ++z) {
    impl_terms.push_back(cp_z_log_conditional(z, y, p));
    brute_terms.push_back(oracles::cp_log_term_raw(z, y, 1.0, 1.0, 1.0));
  }
  CHECK(std::abs(oracles::log_sum_exp_raw(impl_terms) - oracles::log_sum_exp_raw(brute_terms)) <
        1e-10);
}

TEST_CASE("posterior count expectation") {
  CHECK(cp_posterior_z_mean(0.0, {1.0, 1.0, 1.0}) == 0.0);
  CHECK(cp_posterior_z_mean(1.5, {1.0, 1.0, 1.0}) ==
        doctest::Approx(1.6128036257761977).epsilon(1e-10));

  for (double lam : kGridLambda)
    for (double mu : kGridMu)
      for (double om : kGridOmega)
        for (double y : {0.1, 1.0, 20.0}) {
          const double impl = cp_posterior_z_mean(y, {lam, mu, om});
          const double brute = oracles::cp_posterior_z_mean_brute(y, lam, mu, om, 10000);
          CHECK(std::abs(impl - brute) < 1e-8);
          CHECK(impl > 0.0);
        }
}
