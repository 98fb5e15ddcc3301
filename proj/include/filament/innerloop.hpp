#pragma once

#include <optional>
#include <string>
#include <vector>

#include "filament/demand.hpp"
#include "filament/failure.hpp"
#include "filament/fixedpoint.hpp"
#include "filament/types.hpp"

namespace filament {

// Observed market panel. Row 0 is the stationary pseudo-period seeding the
// pre-sample history; rows 1..T are data periods.
struct DemandPanel {
  std::vector<Product> products;
  int n_nests = 0;
  int T = 0;
  MatrixXd price;       // (T+1) x J
  MatrixXd share;       // (T+1) x J, strictly positive
  VectorXd share0;      // (T+1)
  MatrixXd nest_share;  // (T+1) x G

  int n_products() const { return static_cast<int>(products.size()); }

  // Build from data rows (T x J); the stationary row is the per-product mean.
  static DemandPanel from_data(std::vector<Product> products, int n_nests,
                               const MatrixXd& price_data, const MatrixXd& share_data);
  void validate() const;
};

enum class InnerAlgorithm { Proposed, BlpContraction };

struct InnerSolveResult {
  MatrixXd delta;    // J x (T+1); column order matches panel rows
  MatrixXd v;        // I x (T+1) consumer values V^C(no inventory)
  MatrixXd pr0;      // I x (T+1)
  std::vector<MatrixXd> ccp;  // per period: (J+1) x I, row J = outside CCP
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> residual_path;
  int floor_hits = 0;  // times the outside-rescale floor engaged early on
};

// Demand-inversion fixed point: solves (V^C, IV^C, Pr0) and the analytic
// mean utilities, given nonlinear parameters.
class InnerLoop {
 public:
  InnerLoop(const DemandPanel& panel, const DemandParams& params,
            const std::vector<ConsumerType>& types, const FailureModel& failure);

  // One sweep of the proposed mapping Phi^D on the flat state (V, IV, logPr0).
  VectorXd phi_d(const VectorXd& z) const;
  // One sweep of the BLP-contraction baseline on the flat state (V, delta, logPr0).
  VectorXd phi_blp(const VectorXd& z) const;

  VectorXd initial_state(InnerAlgorithm alg) const;
  std::vector<Block> blocks(InnerAlgorithm alg) const;

  InnerSolveResult solve(InnerAlgorithm alg, const SpectralConfig& cfg = {}) const;

  // Mean utilities implied by a flat state (analytic for the proposed
  // mapping, stored for the baseline).
  MatrixXd delta_of(InnerAlgorithm alg, const VectorXd& z) const;

  // Model-implied product / nest / outside shares at a converged solution.
  struct ModelShares {
    MatrixXd share;
    MatrixXd nest_share;
    VectorXd share0;
  };
  ModelShares model_shares(const InnerSolveResult& sol) const;

  // Rebuild a flat state for either mapping from a solved result, so one
  // mapping's fixed point can be residual-tested under the other.
  VectorXd pack_state(InnerAlgorithm alg, const InnerSolveResult& sol) const;

  int n_types() const { return static_cast<int>(types_.size()); }

 private:
  struct Sweep;  // scratch for one mapping application
  const DemandPanel& panel_;
  DemandParams params_;
  std::vector<ConsumerType> types_;
  const FailureModel& failure_;
  mutable int floor_hits_ = 0;

  int idxV(int i, int t) const;
  int idxIV(int g, int i, int t) const;
  int idxP(InnerAlgorithm alg, int i, int t) const;
  int idxD(int j, int t) const;

  void kappa_and_v0(const MatrixXd& V, MatrixXd& kappa_it_j, MatrixXd& v0) const;
  friend struct Sweep;
};

// Forward-simulate the demand side given mean utilities and prices: solves
// the stationary consumer problem, rolls values backward and states forward.
// Used as the self-consistency oracle and by the synthetic generator.
struct SimulatedDemand {
  MatrixXd share;       // (T+1) x J
  VectorXd share0;      // (T+1)
  MatrixXd nest_share;  // (T+1) x G
  MatrixXd v;           // I x (T+1)
  MatrixXd pr0;         // I x (T+1)
  std::vector<MarketState> states;  // state at the start of each data period (1..T)
};
SimulatedDemand simulate_demand(const std::vector<Product>& products, int n_nests,
                                const MatrixXd& delta, const MatrixXd& price,
                                const DemandParams& params,
                                const std::vector<ConsumerType>& types,
                                const FailureModel& failure);

}  // namespace filament
