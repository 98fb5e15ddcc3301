#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "filament/types.hpp"

namespace filament {

// Discounted summaries of one lifetime law.
struct DiscountFactors {
  double expected_beta_l = 0.0;   // E[beta^L]
  double discounted_phi = 0.0;    // sum_{tau>=0} beta^tau phi(tau)
  double tail_bound = 0.0;        // bound on the mass ignored by truncation
};

// Lifetime law of one (consumer type, durability level) pair.
//
// Survival is phi(tau) = exp(-(tau/eta)^lambda) at integer ages,
// f(tau) = phi(tau-1) - phi(tau). phi is the probability the product is
// still working tau months after purchase; f(tau) the probability it fails
// exactly at age tau.
struct FailureLaw {
  double shape = 0.0;  // lambda; <= 0 marks a hand-built table (no survivor curve)
  double scale = 0.0;  // eta, months
  double usage = 0.0;  // I, hours per month
  double mu = 0.0;     // rated lifetime, hours
  int t_max = 0;
  std::vector<double> phi;  // phi[0..t_max], phi[0] = 1
  std::vector<double> f;    // f[0..t_max], f[0] = 0

  double mean_lifetime_months() const;  // sum tau * f(tau)

  // Continuous-age survivor, used by the age basis of the equilibrium solver.
  double survivor(double tau) const;

  // phi(to)/phi(from) at real-valued ages. Throws on a dead 'from' state.
  double cond_survival(double tau_from, double tau_to) const;

  // Table-based conditional survival phi(tau+1)/phi(tau); the truncated
  // residual mass at t_max is retired one period later.
  double cond_survival_next(int tau) const;

  // Probability a purchase stops working exactly `lag` periods later, under
  // the same truncation: f(lag) for lag <= t_max, the residual phi(t_max) at
  // lag t_max+1, zero beyond.
  double fail_mass_at_lag(int lag) const;

  DiscountFactors discount_factors(double beta) const;

  static FailureLaw from_weibull(double scale, double shape, double usage, double mu);
  // One-hoss-shay law failing deterministically at age k.
  static FailureLaw deterministic(int k, double usage = 76.94);
};

struct ScaleSolve {
  FailureLaw law;
  int iterations = 0;
  double residual = 0.0;            // relative mean-lifetime error at the solution
  bool degenerate_sub_month = false;  // mu/usage < 1 month
};

// Solve eta so that usage * E[L] = mu for the discretized Weibull law.
// Newton from the continuous-Weibull warm start; throws on non-convergence
// with the residual in the message.
ScaleSolve solve_scale(double mu, double shape, double usage, double tol = 1e-12,
                       int max_iter = 60);

// Calibrated lifetime laws for every (type, durability level) pair.
class FailureModel {
 public:
  FailureModel() = default;
  static FailureModel calibrate(const std::vector<ConsumerType>& types,
                                const std::vector<double>& mu_levels, double shape,
                                double tol = 1e-12);
  // Same law for every type (used when usage is common, or for test fixtures).
  static FailureModel uniform(const FailureLaw& law, int n_types, int n_durs);
  static FailureModel from_laws(std::vector<std::vector<FailureLaw>> laws);

  const FailureLaw& law(int type, int dur) const { return laws_.at(type).at(dur); }
  int n_types() const { return static_cast<int>(laws_.size()); }
  int n_durs() const { return laws_.empty() ? 0 : static_cast<int>(laws_[0].size()); }
  const std::vector<double>& mu_levels() const { return mu_levels_; }

  // CSV with columns: type,mu,tau,phi,f
  std::string to_csv() const;

 private:
  std::vector<std::vector<FailureLaw>> laws_;  // [type][dur]
  std::vector<double> mu_levels_;
};

}  // namespace filament
