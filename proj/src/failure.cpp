#include "filament/failure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace filament {

namespace {

double weibull_survivor(double tau, double eta, double lambda) {
  if (tau <= 0.0) return 1.0;
  return std::exp(-std::pow(tau / eta, lambda));
}

// E[L] = sum_{tau>=0} Pr(L > tau) = sum_{tau>=0} phi(tau), summed until the
// terms vanish.
double discrete_mean(double eta, double lambda) {
  double sum = 0.0;
  const int cap = static_cast<int>(10.0 * eta) + 1000;
  for (int tau = 0; tau <= cap; ++tau) {
    const double s = weibull_survivor(tau, eta, lambda);
    sum += s;
    if (s < 1e-16 && tau > eta) break;
  }
  return sum;
}

double discrete_mean_deriv(double eta, double lambda) {
  double sum = 0.0;
  const int cap = static_cast<int>(10.0 * eta) + 1000;
  for (int tau = 1; tau <= cap; ++tau) {
    const double s = weibull_survivor(tau, eta, lambda);
    // d/deta exp(-(tau/eta)^l) = s * l * tau^l / eta^(l+1)
    sum += s * lambda * std::pow(static_cast<double>(tau) / eta, lambda) / eta;
    if (s < 1e-16 && tau > eta) break;
  }
  return sum;
}

}  // namespace

double FailureLaw::mean_lifetime_months() const {
  double m = 0.0;
  for (int tau = 1; tau <= t_max; ++tau) m += tau * f[tau];
  // Residual mass phi(t_max) would fail beyond the table; for calibrated laws
  // it is below 1e-10 and ignored here.
  return m;
}

double FailureLaw::survivor(double tau) const {
  if (tau <= 0.0) return 1.0;
  if (shape <= 0.0) {
    // Deterministic table: step function at the failure age.
    const int k = static_cast<int>(phi.size());
    for (int a = 1; a < k; ++a)
      if (phi[a] == 0.0) return tau < a ? 1.0 : 0.0;
    return tau <= t_max ? 1.0 : 0.0;
  }
  return weibull_survivor(tau, scale, shape);
}

double FailureLaw::cond_survival(double tau_from, double tau_to) const {
  if (tau_to < tau_from) throw std::invalid_argument("cond_survival: tau_to < tau_from");
  const double base = survivor(tau_from);
  if (base <= 0.0) throw std::domain_error("cond_survival: conditioning on a dead state");
  return survivor(tau_to) / base;
}

double FailureLaw::cond_survival_next(int tau) const {
  // The truncated residual mass at t_max is retired next period.
  if (tau >= t_max) return 0.0;
  if (phi[tau] <= 0.0) return 0.0;
  return phi[tau + 1] / phi[tau];
}

double FailureLaw::fail_mass_at_lag(int lag) const {
  if (lag >= 1 && lag <= t_max) return f[lag];
  if (lag == t_max + 1) return phi[t_max];
  return 0.0;
}

DiscountFactors FailureLaw::discount_factors(double beta) const {
  if (!(beta >= 0.0 && beta < 1.0))
    throw std::invalid_argument("discount_factors: beta must be in [0,1)");
  DiscountFactors out;
  double bt = 1.0;
  for (int tau = 0; tau <= t_max; ++tau) {
    out.discounted_phi += bt * phi[tau];
    if (tau >= 1) out.expected_beta_l += bt * f[tau];
    bt *= beta;
  }
  // bt is now beta^(t_max+1); remaining failure mass is phi(t_max).
  out.tail_bound = beta >= 1.0 ? phi[t_max] : bt * phi[t_max] / (1.0 - beta);
  return out;
}

FailureLaw FailureLaw::from_weibull(double scale, double shape, double usage, double mu) {
  if (scale <= 0.0 || shape <= 0.0) throw std::invalid_argument("from_weibull: nonpositive parameter");
  FailureLaw law;
  law.shape = shape;
  law.scale = scale;
  law.usage = usage;
  law.mu = mu;

  // Horizon: survival below 1e-10, at least twice the discounted-age domain
  // the Chebyshev age basis uses, and a tail certified for beta up to 0.99.
  const double sum_phi = discrete_mean(scale, shape);
  int t1 = 1;
  while (weibull_survivor(t1, scale, shape) >= 1e-10) ++t1;
  int t2 = static_cast<int>(std::ceil(2.0 * sum_phi));
  int t3 = 1;
  while (std::pow(0.99, t3) * weibull_survivor(t3, scale, shape) >= 1e-15 &&
         t3 < 20000)
    ++t3;
  law.t_max = std::max({t1, t2, t3, 2});

  law.phi.resize(law.t_max + 1);
  law.f.resize(law.t_max + 1);
  law.phi[0] = 1.0;
  law.f[0] = 0.0;
  for (int tau = 1; tau <= law.t_max; ++tau) {
    law.phi[tau] = weibull_survivor(tau, scale, shape);
    law.f[tau] = law.phi[tau - 1] - law.phi[tau];
  }
  return law;
}

FailureLaw FailureLaw::deterministic(int k, double usage) {
  if (k < 1) throw std::invalid_argument("deterministic: k must be >= 1");
  FailureLaw law;
  law.shape = 0.0;
  law.scale = static_cast<double>(k);
  law.usage = usage;
  law.mu = usage * k;
  law.t_max = std::max(2 * k, 2);
  law.phi.assign(law.t_max + 1, 0.0);
  law.f.assign(law.t_max + 1, 0.0);
  for (int tau = 0; tau < k; ++tau) law.phi[tau] = 1.0;
  law.f[k] = 1.0;
  return law;
}

ScaleSolve solve_scale(double mu, double shape, double usage, double tol, int max_iter) {
  if (mu <= 0.0 || shape <= 0.0 || usage <= 0.0)
    throw std::invalid_argument("solve_scale: mu, shape and usage must be positive");

  const double target = mu / usage;  // mean lifetime, months
  ScaleSolve out;
  out.degenerate_sub_month = target <= 1.0;

  // Continuous-Weibull mean is eta * Gamma(1 + 1/lambda); excellent warm start
  // for the discretized law.
  double eta = target / std::tgamma(1.0 + 1.0 / shape);
  eta = std::max(eta, 1e-6);

  // The discretized mean 1 + sum_{tau>=1} phi(tau) exceeds one month for any
  // eta > 0, so sub-month targets have no discretized solution; keep the
  // continuous calibration for them and report the degenerate flag.
  if (out.degenerate_sub_month) {
    out.law = FailureLaw::from_weibull(eta, shape, usage, mu);
    out.residual = (out.law.mean_lifetime_months() - target) / target;
    return out;
  }

  double resid = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    // E[L] = sum_{tau>=0} Pr(L > tau) = sum_{tau>=0} phi(tau).
    const double mean = discrete_mean(eta, shape);
    resid = (mean - target) / target;
    out.iterations = it + 1;
    if (std::abs(resid) < tol) break;
    const double deriv = discrete_mean_deriv(eta, shape);
    if (deriv <= 0.0) throw std::runtime_error("solve_scale: vanishing derivative");
    double step = (mean - target) / deriv;
    // Keep eta positive.
    while (eta - step <= 0.0) step *= 0.5;
    eta -= step;
  }
  if (std::abs(resid) >= tol) {
    std::ostringstream msg;
    msg << "solve_scale: Newton failed to converge, relative residual " << resid
        << " after " << out.iterations << " iterations (mu=" << mu << ", shape=" << shape
        << ")";
    throw std::runtime_error(msg.str());
  }

  out.law = FailureLaw::from_weibull(eta, shape, usage, mu);
  out.residual = resid;
  return out;
}

FailureModel FailureModel::calibrate(const std::vector<ConsumerType>& types,
                                     const std::vector<double>& mu_levels, double shape,
                                     double tol) {
  FailureModel model;
  model.mu_levels_ = mu_levels;
  model.laws_.resize(types.size());
  for (size_t i = 0; i < types.size(); ++i) {
    model.laws_[i].reserve(mu_levels.size());
    for (double mu : mu_levels)
      model.laws_[i].push_back(solve_scale(mu, shape, types[i].usage, tol).law);
  }
  return model;
}

FailureModel FailureModel::uniform(const FailureLaw& law, int n_types, int n_durs) {
  FailureModel model;
  model.mu_levels_.assign(n_durs, law.mu);
  model.laws_.assign(n_types, std::vector<FailureLaw>(n_durs, law));
  return model;
}

FailureModel FailureModel::from_laws(std::vector<std::vector<FailureLaw>> laws) {
  FailureModel model;
  model.laws_ = std::move(laws);
  if (!model.laws_.empty())
    for (const auto& l : model.laws_[0]) model.mu_levels_.push_back(l.mu);
  return model;
}

std::string FailureModel::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "type,mu,tau,phi,f\n";
  for (size_t i = 0; i < laws_.size(); ++i)
    for (const auto& law : laws_[i])
      for (int tau = 0; tau <= law.t_max; ++tau)
        os << i << "," << law.mu << "," << tau << "," << law.phi[tau] << "," << law.f[tau]
           << "\n";
  return os.str();
}

}  // namespace filament
