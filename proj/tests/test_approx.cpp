#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "filament/approx.hpp"

using namespace filament;

TEST_CASE("chebyshev evaluation and derivative") {
  for (double x : {-0.9, -0.3, 0.0, 0.5, 1.0}) {
    CHECK(cheb::T(0, x) == 1.0);
    CHECK(cheb::T(1, x) == x);
    CHECK(cheb::T(2, x) == doctest::Approx(2 * x * x - 1));
    CHECK(cheb::T(3, x) == doctest::Approx(4 * x * x * x - 3 * x));
    const double h = 1e-6;
    for (int n = 1; n <= 5; ++n) {
      const double fd = (cheb::T(n, x + h) - cheb::T(n, x - h)) / (2 * h);
      CHECK(cheb::dT(n, x) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("smolyak level-1 node counts") {
  VectorXd lo1 = VectorXd::Constant(1, -2.0), hi1 = VectorXd::Constant(1, 3.0);
  SmolyakBasis b1(lo1, hi1, 1);
  CHECK(b1.size() == 3);

  VectorXd lo2 = VectorXd::Constant(2, 0.0), hi2 = VectorXd::Constant(2, 1.0);
  SmolyakBasis b2(lo2, hi2, 1);
  CHECK(b2.size() == 5);

  VectorXd lo4 = VectorXd::Constant(4, 0.0), hi4 = VectorXd::Constant(4, 1.0);
  SmolyakBasis b4(lo4, hi4, 1);
  CHECK(b4.size() == 9);

  SmolyakBasis b4l2(lo4, hi4, 2);
  CHECK(b4l2.size() == 2 * 16 + 2 * 4 + 1);

  CHECK_THROWS(SmolyakBasis(lo2, lo2, 1));  // zero width
}

TEST_CASE("smolyak interpolation is exact on its nodes and for its span") {
  VectorXd lo = VectorXd::Constant(3, -1.5), hi = VectorXd::Constant(3, 2.5);
  SmolyakBasis basis(lo, hi, 1);

  SUBCASE("constant function needs only the constant coefficient") {
    VectorXd vals = VectorXd::Constant(basis.size(), 4.2);
    VectorXd coef = basis.fit(vals);
    CHECK(coef(0) == doctest::Approx(4.2));
    for (int k = 1; k < basis.size(); ++k) CHECK(std::abs(coef(k)) < 1e-12);
  }

  SUBCASE("radial quadratic reproduced exactly") {
    // sum_m x_m^2 lies in the level-1 span: x^2 = (T2(u)+1)/2 after scaling.
    auto f = [](const VectorXd& x) { return x.squaredNorm() - 0.3 * x.sum() + 1.0; };
    VectorXd vals(basis.size());
    for (int n = 0; n < basis.size(); ++n) vals(n) = f(basis.nodes().row(n));
    VectorXd coef = basis.fit(vals);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 25; ++k) {
      VectorXd x(3);
      for (int d = 0; d < 3; ++d) x(d) = lo(d) + u(rng) * (hi(d) - lo(d));
      CHECK(basis.eval(coef, x) == doctest::Approx(f(x)).epsilon(1e-12));
      VectorXd g = basis.grad(coef, x);
      for (int d = 0; d < 3; ++d) CHECK(g(d) == doctest::Approx(2 * x(d) - 0.3).epsilon(1e-10));
    }
  }

  SUBCASE("interpolation exact at nodes for arbitrary data") {
    std::mt19937 rng(11);
    std::normal_distribution<double> z;
    VectorXd vals(basis.size());
    for (int n = 0; n < basis.size(); ++n) vals(n) = z(rng);
    VectorXd coef = basis.fit(vals);
    for (int n = 0; n < basis.size(); ++n)
      CHECK(basis.eval(coef, basis.nodes().row(n)) == doctest::Approx(vals(n)).epsilon(1e-12));
  }
}

TEST_CASE("smolyak level-2 captures smooth off-grid behavior better") {
  VectorXd lo = VectorXd::Constant(2, -1.0), hi = VectorXd::Constant(2, 1.0);
  SmolyakBasis b1(lo, hi, 1), b2(lo, hi, 2);
  auto f = [](const VectorXd& x) { return std::exp(0.5 * x(0) - 0.3 * x(1)); };
  auto fit_err = [&](const SmolyakBasis& b) {
    VectorXd vals(b.size());
    for (int n = 0; n < b.size(); ++n) vals(n) = f(b.nodes().row(n));
    VectorXd coef = b.fit(vals);
    double err = 0.0;
    for (double x = -0.95; x < 1.0; x += 0.19)
      for (double y = -0.95; y < 1.0; y += 0.19) {
        VectorXd p(2);
        p << x, y;
        err = std::max(err, std::abs(b.eval(coef, p) - f(p)));
      }
    return err;
  };
  CHECK(fit_err(b2) < 0.3 * fit_err(b1));
}

TEST_CASE("age basis interpolates within [1, t_max]") {
  AgeBasis ab(6, 40.0);
  CHECK(ab.size() == 7);
  for (double a : ab.ages()) {
    CHECK(a >= 1.0);
    CHECK(a <= 40.0);
  }
  auto f = [](double tau) { return 1.0 / (1.0 + 0.1 * tau); };
  VectorXd vals(ab.size());
  for (int m = 0; m < ab.size(); ++m) vals(m) = f(ab.ages()[m]);
  VectorXd coef = ab.fit(vals);
  for (int m = 0; m < ab.size(); ++m)
    CHECK(ab.eval(coef, ab.ages()[m]) == doctest::Approx(vals(m)).epsilon(1e-12));
  for (double tau = 1.0; tau <= 40.0; tau += 3.7)
    CHECK(ab.eval(coef, tau) == doctest::Approx(f(tau)).epsilon(2e-3));
}

TEST_CASE("lift_state inverts compress_state") {
  auto types = std::vector<ConsumerType>{{0.5, 1.0, 76.94}, {0.5, 2.0, 76.94}};
  auto fm = FailureModel::calibrate(types, {1000.0, 2000.0}, 2.4);
  std::vector<VectorXd> buy(2, VectorXd(2));
  buy[0] << 0.05, 0.03;
  buy[1] << 0.08, 0.06;
  MarketState ref = stationary_state(buy, fm);
  SufficientState bref = compress_state(ref, fm);

  SUBCASE("reference compression is a fixed point with unit scalings") {
    MarketState lifted = lift_state(bref, ref, fm);
    for (int i = 0; i < 2; ++i) {
      CHECK(lifted.pr0[i] == doctest::Approx(ref.pr0[i]).epsilon(1e-13));
      for (int d = 0; d < 2; ++d)
        for (size_t a = 1; a < ref.inv[i][d].size(); ++a)
          CHECK(lifted.inv[i][d][a] == doctest::Approx(ref.inv[i][d][a]).epsilon(1e-12));
    }
  }

  SUBCASE("zero-inventory target gives zero scalings") {
    SufficientState b;
    b.b1 = {1.0, 1.0};
    b.b2 = {0.0, 0.0};
    MarketState lifted = lift_state(b, ref, fm);
    for (int i = 0; i < 2; ++i) {
      CHECK(lifted.pr0[i] == 1.0);
      for (int d = 0; d < 2; ++d)
        for (size_t a = 1; a < lifted.inv[i][d].size(); ++a) CHECK(lifted.inv[i][d][a] == 0.0);
    }
  }

  SUBCASE("compress(lift(b)) = b over a spread of targets") {
    for (double f1 : {0.7, 0.9, 1.1, 1.3})
      for (double f2 : {0.6, 1.0, 1.4}) {
        SufficientState b;
        b.b1 = {bref.b1[0] * f1, bref.b1[1] * f2};
        b.b2 = {bref.b2[0] * f2, bref.b2[1] * f1};
        MarketState lifted = lift_state(b, ref, fm);
        SufficientState back = compress_state(lifted, fm);
        for (int i = 0; i < 2; ++i) {
          CHECK(back.b1[i] == doctest::Approx(b.b1[i]).epsilon(1e-12));
          CHECK(back.b2[i] == doctest::Approx(b.b2[i]).epsilon(1e-12));
        }
      }
  }
}
