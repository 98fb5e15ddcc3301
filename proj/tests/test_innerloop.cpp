#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "filament/innerloop.hpp"

using namespace filament;

namespace {

struct Fixture {
  std::vector<Product> products;
  int n_nests = 2;
  DemandParams params;
  std::vector<ConsumerType> types;
  FailureModel failure;
  DemandPanel panel;
  MatrixXd delta_true;
};

// Two-firm market, both nests populated, durability varying inside the
// incandescent nest; panel simulated from the structural demand system.
Fixture make_fixture(double rho_inc, double rho_cfl, int T, bool hetero_types) {
  Fixture fx;
  auto mk = [](int id, int firm, int nest, int dur, double mu) {
    Product p;
    p.id = id;
    p.firm = firm;
    p.nest = nest;
    p.dur = dur;
    p.mu = mu;
    return p;
  };
  fx.products = {mk(0, 0, 0, 0, 1000), mk(1, 0, 0, 1, 2000), mk(2, 1, 0, 0, 1000),
                 mk(3, 1, 1, 2, 6000), mk(4, 1, 1, 3, 13000), mk(5, 0, 1, 2, 6000)};
  if (hetero_types)
    fx.types = {{0.55, 2.0e-3, 76.94}, {0.45, 4.5e-3, 76.94}};
  else
    fx.types = {{1.0, 2.5e-3, 76.94}};
  fx.failure = FailureModel::calibrate(fx.types, {1000, 2000, 6000, 13000}, 2.4);
  fx.params.rho = {rho_inc, rho_cfl};
  fx.params.beta_c = 0.99;

  const int J = 6;
  MatrixXd price(T + 1, J), delta(J, T + 1);
  VectorXd base_p(J), base_d(J);
  base_p << 100, 180, 85, 700, 950, 720;
  base_d << -1.0, 0.3, -1.2, 1.5, 2.2, 1.3;
  for (int t = 0; t <= T; ++t)
    for (int j = 0; j < J; ++j) {
      const double wig = t == 0 ? 0.0 : 0.03 * std::sin(1.7 * t + j);
      price(t, j) = base_p(j) * (1.0 + wig);
      delta(j, t) = base_d(j) + (t == 0 ? 0.0 : 0.05 * std::cos(0.9 * t + 2 * j));
    }
  fx.delta_true = delta;

  SimulatedDemand sim = simulate_demand(fx.products, fx.n_nests, delta, price, fx.params,
                                        fx.types, fx.failure);
  fx.panel.products = fx.products;
  fx.panel.n_nests = fx.n_nests;
  fx.panel.T = T;
  fx.panel.price = price;
  fx.panel.share = sim.share;
  fx.panel.share0 = sim.share0;
  fx.panel.nest_share = sim.nest_share;
  fx.panel.validate();
  return fx;
}

}  // namespace

TEST_CASE("spectral iteration on a scalar contraction") {
  auto map = [](const VectorXd& z) { return VectorXd(0.5 * z); };
  VectorXd z0 = VectorXd::Constant(1, 1.0);
  std::vector<Block> blocks = {{"z", 0, 1}};
  SpectralConfig cfg;
  cfg.tol = 1e-13;
  cfg.record_path = true;
  auto sp = spectral_iterate(map, z0, blocks, cfg);
  auto pl = plain_iterate(map, z0, 1e-13);
  CHECK(sp.converged);
  CHECK(std::abs(sp.z(0)) < 1e-12);
  CHECK(sp.iterations <= pl.iterations);
  // First step honors alpha0 = 0.1: residual shrinks by exactly 0.95.
  REQUIRE(sp.residual_path.size() >= 2);
  CHECK(sp.residual_path[1] / sp.residual_path[0] == doctest::Approx(0.95).epsilon(1e-12));
}

TEST_CASE("static logit inversion is exact after one application") {
  // No random coefficients, no nests, no dynamics, nondurable products:
  // the proposed update lands on log S_j - log S_0 immediately.
  Fixture fx;
  auto mk = [](int id, int nest, int dur) {
    Product p;
    p.id = id;
    p.nest = nest;
    p.dur = dur;
    p.mu = 76.94;
    return p;
  };
  fx.products = {mk(0, 0, 0), mk(1, 0, 0), mk(2, 0, 0)};
  fx.n_nests = 1;
  fx.types = {{1.0, 3.0e-3, 76.94}};
  fx.failure = FailureModel::uniform(FailureLaw::deterministic(1), 1, 1);
  fx.params.rho = {0.0};
  fx.params.beta_c = 0.0;

  DemandPanel panel;
  panel.products = fx.products;
  panel.n_nests = 1;
  panel.T = 0;
  panel.price = MatrixXd::Zero(1, 3);
  panel.price << 120, 260, 90;
  panel.share = MatrixXd::Zero(1, 3);
  panel.share << 0.25, 0.15, 0.35;
  panel.share0 = VectorXd::Constant(1, 0.25);
  panel.nest_share = MatrixXd::Constant(1, 1, 0.75);

  InnerLoop loop(panel, fx.params, fx.types, fx.failure);
  VectorXd z1 = loop.phi_d(loop.initial_state(InnerAlgorithm::Proposed));
  VectorXd z2 = loop.phi_d(z1);
  CHECK((z2 - z1).lpNorm<Eigen::Infinity>() < 1e-12);

  MatrixXd delta = loop.delta_of(InnerAlgorithm::Proposed, z1);
  for (int j = 0; j < 3; ++j) {
    const double expect = std::log(panel.share(0, j)) - std::log(panel.share0(0)) +
                          fx.types[0].price_coef * panel.price(0, j);
    CHECK(delta(j, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("proposed loop inverts a simulated dynamic panel exactly") {
  Fixture fx = make_fixture(0.6, 0.3, 4, true);
  InnerLoop loop(fx.panel, fx.params, fx.types, fx.failure);
  SpectralConfig cfg;
  cfg.tol = 1e-13;
  auto sol = loop.solve(InnerAlgorithm::Proposed, cfg);
  REQUIRE(sol.converged);
  CHECK(sol.floor_hits == 0);

  // Recovered mean utilities match the data-generating ones.
  CHECK((sol.delta - fx.delta_true).lpNorm<Eigen::Infinity>() < 1e-9);

  // Converged solution reproduces product, nest and outside shares.
  auto ms = loop.model_shares(sol);
  CHECK((ms.share - fx.panel.share).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((ms.nest_share - fx.panel.nest_share).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((ms.share0 - fx.panel.share0).lpNorm<Eigen::Infinity>() < 1e-10);

  // Independent forward simulation at the recovered delta regenerates the data.
  SimulatedDemand sim = simulate_demand(fx.products, fx.n_nests, sol.delta, fx.panel.price,
                                        fx.params, fx.types, fx.failure);
  CHECK((sim.share - fx.panel.share).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("both mappings share the same fixed point") {
  Fixture fx = make_fixture(0.6, 0.3, 3, true);
  InnerLoop loop(fx.panel, fx.params, fx.types, fx.failure);
  SpectralConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_iter = 400000;
  auto sol_d = loop.solve(InnerAlgorithm::Proposed, cfg);
  auto sol_b = loop.solve(InnerAlgorithm::BlpContraction, cfg);
  REQUIRE(sol_d.converged);
  REQUIRE(sol_b.converged);
  CHECK((sol_d.delta - sol_b.delta).lpNorm<Eigen::Infinity>() < 1e-8);

  // Each mapping has negligible residual at the other's solution.
  VectorXd zb = loop.pack_state(InnerAlgorithm::BlpContraction, sol_d);
  CHECK((loop.phi_blp(zb) - zb).lpNorm<Eigen::Infinity>() < 1e-8);
  VectorXd zd = loop.pack_state(InnerAlgorithm::Proposed, sol_b);
  CHECK((loop.phi_d(zd) - zd).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("textbook BLP step under rho = 0") {
  Fixture fx = make_fixture(0.0, 0.0, 2, false);
  InnerLoop loop(fx.panel, fx.params, fx.types, fx.failure);
  // One sweep from a hand-built state reproduces delta + log S - log s.
  auto sol = loop.solve(InnerAlgorithm::BlpContraction, {});
  REQUIRE(sol.converged);
  CHECK((sol.delta - fx.delta_true).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("iteration ordering under a near-unit nest parameter") {
  // rho_Inc = 0.96 regime: the proposed mapping needs at most a fifth of the
  // BLP-contraction iterations.
  Fixture fx = make_fixture(0.96, 0.7, 3, false);
  InnerLoop loop(fx.panel, fx.params, fx.types, fx.failure);
  SpectralConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_iter = 500000;
  auto sol_d = loop.solve(InnerAlgorithm::Proposed, cfg);
  auto sol_b = loop.solve(InnerAlgorithm::BlpContraction, cfg);
  REQUIRE(sol_d.converged);
  REQUIRE(sol_b.converged);
  CHECK((sol_d.delta - sol_b.delta).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(sol_d.iterations * 5 <= sol_b.iterations);
}

TEST_CASE("panel construction from raw data uses mean stationary rows") {
  Fixture fx = make_fixture(0.5, 0.5, 3, false);
  MatrixXd price_data = fx.panel.price.bottomRows(3);
  MatrixXd share_data = fx.panel.share.bottomRows(3);
  auto panel = DemandPanel::from_data(fx.products, 2, price_data, share_data);
  CHECK(panel.T == 3);
  CHECK(panel.price(0, 0) == doctest::Approx(price_data.col(0).mean()));
  CHECK(panel.share0(0) == doctest::Approx(1.0 - share_data.colwise().mean().sum()));

  MatrixXd bad = share_data;
  bad(1, 2) = 0.0;
  CHECK_THROWS(DemandPanel::from_data(fx.products, 2, price_data, bad));
}
