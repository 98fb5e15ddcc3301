#pragma once

#include <vector>

#include "filament/failure.hpp"
#include "filament/types.hpp"

namespace filament {

// Full inventory distribution over {no product} and (durability, age) cells,
// per consumer type. inv[i][d][a] is the mass of type-i consumers holding a
// durability-d product of age a (a = 1..t_max(i,d); index 0 unused).
struct MarketState {
  std::vector<double> pr0;
  std::vector<std::vector<std::vector<double>>> inv;

  static MarketState empty(const FailureModel& fm);
  double total_mass(int type) const;
  int n_types() const { return static_cast<int>(pr0.size()); }
};

// Two-number-per-type compression of MarketState: the no-inventory share and
// the expected failure inflow for next period.
struct SufficientState {
  std::vector<double> b1;  // Pr0 per type
  std::vector<double> b2;  // expected failure mass per type

  // Flat coordinate layout used by the collocation grid: (b1_0, b2_0, b1_1, ...)
  VectorXd flat() const;
  static SufficientState from_flat(const VectorXd& x);
  int n_types() const { return static_cast<int>(b1.size()); }
};

// Nested-logit choice objects for one consumer type.
struct ChoiceProbs {
  VectorXd ccp;     // per product, conditional on being in the market
  double ccp0 = 0;  // outside alternative
  VectorXd iv;      // nest-level inclusive values IV_g
  double v = 0;     // top-level inclusive value (the value of being in the market)
  VectorXd within;  // within-nest shares s_{j|g}
};

// CCPs from choice-specific values vtilde (products) and vtilde0 (outside),
// with log-sum-exp stabilization. rho_g >= 1 is rejected.
ChoiceProbs nested_logit(const VectorXd& vtilde, double vtilde0,
                         const std::vector<int>& nest_of, const std::vector<double>& rho);

// (J+1)x(J+1) Jacobian d ccp_row / d vtilde_col; index J is the outside option.
MatrixXd nested_logit_jacobian(const ChoiceProbs& cp, const std::vector<int>& nest_of,
                               const std::vector<double>& rho);

// Purchase probability of one type from its purchase history.
// past_purchases[l] holds the by-durability purchase shares at lag l+1;
// lags beyond the history use the stationary shares. stilde0_prev is the
// fraction in the market last period that did not buy.
double purchase_prob(const std::vector<VectorXd>& past_purchases,
                     const VectorXd& stationary_purchases, double stilde0_prev,
                     const FailureModel& fm, int type);

// Closed-form stationary purchase probability given by-durability CCPs.
double stationary_pr0(const VectorXd& ccp_by_dur, const FailureModel& fm, int type);

// Aggregate product shares s_j = sum_i w_i pr0_i ccp_ij.
VectorXd aggregate_shares(const std::vector<ConsumerType>& types,
                          const std::vector<double>& pr0,
                          const std::vector<VectorXd>& ccp_by_type);

// One period of the inventory law of motion. ccp_by_dur[i] aggregates product
// CCPs by durability level; ccp0[i] is the outside CCP. Throws if more than
// 1e-10 of mass leaks.
MarketState advance_state(const MarketState& state,
                          const std::vector<VectorXd>& ccp_by_dur,
                          const std::vector<double>& ccp0, const FailureModel& fm);

// Closed-form stationary state under stationary CCPs; a fixed point of
// advance_state up to the truncated tail.
MarketState stationary_state(const std::vector<VectorXd>& ccp_by_dur,
                             const FailureModel& fm);

SufficientState compress_state(const MarketState& state, const FailureModel& fm);

}  // namespace filament
