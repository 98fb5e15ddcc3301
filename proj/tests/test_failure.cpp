#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "filament/failure.hpp"

using namespace filament;

namespace {

// Independent oracle: bisection on eta over [0.1, 200] with the survivor sum
// truncated at 10*eta.
double bisect_scale(double mu, double shape, double usage) {
  const double target = mu / usage;
  auto mean = [&](double eta) {
    double s = 0.0;
    const int cap = static_cast<int>(10.0 * eta) + 10;
    for (int tau = 0; tau <= cap; ++tau) s += std::exp(-std::pow(tau / eta, shape));
    return s;
  };
  double lo = 0.1, hi = 200.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("solve_scale hits the paper calibration target") {
  // mu = 1000h at I = 76.94 h/month means a 13.0-month average lifetime.
  auto r = solve_scale(1000.0, 2.4, 76.94);
  CHECK(r.law.mean_lifetime_months() == doctest::Approx(1000.0 / 76.94).epsilon(1e-9));
  CHECK_FALSE(r.degenerate_sub_month);
  CHECK(r.law.phi[0] == 1.0);
  CHECK(r.law.f[0] == 0.0);
}

TEST_CASE("solve_scale flags degenerate sub-month lifetimes") {
  // The discretized mean cannot go below one month, so mu = I falls back to
  // the continuous calibration: eta near the unit scale, continuous mean
  // exactly one month, degenerate flag raised.
  auto r = solve_scale(76.94, 2.4, 76.94);
  CHECK(r.degenerate_sub_month);
  CHECK(r.law.scale == doctest::Approx(1.0 / std::tgamma(1.0 + 1.0 / 2.4)));
  CHECK(r.law.scale * std::tgamma(1.0 + 1.0 / 2.4) == doctest::Approx(1.0));
  auto r2 = solve_scale(38.0, 2.4, 76.94);
  CHECK(r2.degenerate_sub_month);
}

TEST_CASE("Newton and bisection agree across the calibration grid") {
  for (double mu : {1000.0, 2000.0, 6000.0, 13000.0}) {
    auto r = solve_scale(mu, 2.4, 76.94);
    const double eta_b = bisect_scale(mu, 2.4, 76.94);
    CHECK(std::abs(r.law.scale - eta_b) < 1e-8 * std::max(1.0, eta_b));
  }
}

TEST_CASE("pmf identities and monotonicity") {
  auto law = solve_scale(2000.0, 2.4, 76.94).law;
  double total = law.phi[law.t_max];
  for (int tau = 1; tau <= law.t_max; ++tau) {
    CHECK(law.f[tau] >= 0.0);
    CHECK(law.f[tau] == doctest::Approx(law.phi[tau - 1] - law.phi[tau]).epsilon(1e-15));
    total += law.f[tau];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  for (int tau = 1; tau <= law.t_max; ++tau) CHECK(law.phi[tau] < law.phi[tau - 1]);

  // Larger mu gives pointwise weakly larger survival and a larger scale.
  auto law1 = solve_scale(1000.0, 2.4, 76.94).law;
  CHECK(law.scale > law1.scale);
  for (int tau = 1; tau <= law1.t_max; ++tau) {
    const double phi2 = tau <= law.t_max ? law.phi[tau] : 0.0;
    CHECK(phi2 >= law1.phi[tau]);
  }
}

TEST_CASE("solve_scale is monotone in mu") {
  double prev = 0.0;
  for (double mu : {500.0, 900.0, 1500.0, 2500.0, 4000.0, 9000.0}) {
    const double eta = solve_scale(mu, 2.4, 76.94).law.scale;
    CHECK(eta > prev);
    prev = eta;
  }
}

TEST_CASE("conditional survival") {
  auto law = solve_scale(1000.0, 2.4, 76.94).law;
  CHECK(law.cond_survival(3.0, 3.0) == doctest::Approx(1.0));
  CHECK(law.cond_survival(0.0, 5.0) == doctest::Approx(law.phi[5]));
  CHECK(law.cond_survival(3.0, 5.0) == doctest::Approx(law.phi[5] / law.phi[3]));
  CHECK_THROWS_AS(law.cond_survival(1e6, 1e6 + 1), std::domain_error);
}

TEST_CASE("discounted lifetime factors") {
  auto law = solve_scale(1000.0, 2.4, 76.94).law;

  SUBCASE("beta to zero keeps only the current period") {
    auto d = law.discount_factors(0.0);
    CHECK(d.expected_beta_l == doctest::Approx(0.0));
    CHECK(d.discounted_phi == doctest::Approx(1.0));
  }

  SUBCASE("one-hoss-shay limit gives beta^k") {
    // Large shape with an integer-month mean approximates deterministic failure.
    auto ohs = solve_scale(76.94 * 4.0, 400.0, 76.94).law;
    auto d = ohs.discount_factors(0.95);
    CHECK(d.expected_beta_l == doctest::Approx(std::pow(0.95, 4)).epsilon(1e-6));
    auto det = FailureLaw::deterministic(4);
    auto dd = det.discount_factors(0.95);
    CHECK(dd.expected_beta_l == doctest::Approx(std::pow(0.95, 4)).epsilon(1e-15));
  }

  SUBCASE("direct summation oracle at a 10x horizon") {
    const double beta = 0.99;
    auto d = law.discount_factors(beta);
    double ebl = 0.0, dphi = 0.0;
    const int horizon = 10 * law.t_max;
    for (int tau = 0; tau <= horizon; ++tau) {
      const double phi = law.survivor(tau);
      const double phim = tau >= 1 ? law.survivor(tau - 1) : 1.0;
      dphi += std::pow(beta, tau) * phi;
      if (tau >= 1) ebl += std::pow(beta, tau) * (phim - phi);
    }
    CHECK(d.expected_beta_l == doctest::Approx(ebl).epsilon(1e-12));
    CHECK(d.discounted_phi == doctest::Approx(dphi).epsilon(1e-12));
    CHECK(d.tail_bound < 1e-12);
  }

  SUBCASE("Abel summation identity") {
    for (double beta : {0.5, 0.9, 0.99}) {
      auto d = law.discount_factors(beta);
      CHECK(std::abs(d.expected_beta_l - (1.0 - (1.0 - beta) * d.discounted_phi)) < 1e-10);
    }
  }
}

TEST_CASE("calibration covers all types and levels and exports csv") {
  auto types = std::vector<ConsumerType>{{0.5, 1.0, 76.94}, {0.5, 2.0, 76.94}};
  auto fm = FailureModel::calibrate(types, {1000.0, 2000.0}, 2.4);
  CHECK(fm.n_types() == 2);
  CHECK(fm.n_durs() == 2);
  const auto csv = fm.to_csv();
  CHECK(csv.find("type,mu,tau,phi,f") == 0);
  CHECK(csv.find("1000") != std::string::npos);
}

TEST_CASE("solve_scale rejects bad input") {
  CHECK_THROWS(solve_scale(-1.0, 2.4, 76.94));
  CHECK_THROWS(solve_scale(1000.0, 0.0, 76.94));
}
