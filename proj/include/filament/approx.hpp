#pragma once

#include <Eigen/Dense>
#include <vector>

#include "filament/demand.hpp"

namespace filament {

namespace cheb {
double T(int n, double x);
double dT(int n, double x);
// n+1 extrema of T_n on [-1,1], ordered from -1 to 1.
std::vector<double> extrema(int n);
}  // namespace cheb

// Sparse Chebyshev collocation basis on a box. Level 1 gives the 2n+1 node
// cross (center plus two extrema per axis) with basis {1, T1(x_m), T2(x_m)};
// level 2 adds pairwise cross terms and orders 3-4.
class SmolyakBasis {
 public:
  SmolyakBasis() = default;
  SmolyakBasis(const VectorXd& lo, const VectorXd& hi, int level);

  int dim() const { return static_cast<int>(lo_.size()); }
  int size() const { return static_cast<int>(orders_.size()); }  // = node count
  const MatrixXd& nodes() const { return nodes_; }               // size() x dim
  const VectorXd& lo() const { return lo_; }
  const VectorXd& hi() const { return hi_; }

  // Basis row / its derivative w.r.t. coordinate d, at a point in original coords.
  VectorXd row(const VectorXd& x) const;
  VectorXd drow(const VectorXd& x, int d) const;

  // Collocation fit: coefficients reproducing the given node values exactly.
  VectorXd fit(const VectorXd& node_values) const;
  double eval(const VectorXd& coef, const VectorXd& x) const;
  VectorXd grad(const VectorXd& coef, const VectorXd& x) const;

  bool contains(const VectorXd& x, double slack = 0.0) const;
  VectorXd clamp(const VectorXd& x) const;

 private:
  VectorXd lo_, hi_;
  MatrixXd nodes_;                        // in original coordinates
  std::vector<std::vector<int>> orders_;  // per basis function, per-dim Chebyshev order
  Eigen::PartialPivLU<MatrixXd> lu_;      // collocation matrix factorization
  double to_unit(double v, int d) const { return 2.0 * (v - lo_(d)) / (hi_(d) - lo_(d)) - 1.0; }
};

// Chebyshev basis in product age on [1, t_max], using the affine map
// kappa(tau) = 2 (tau+1)/(t_max+1) - 1. Collocation ages are Chebyshev
// extrema of the image interval pulled back to age space.
class AgeBasis {
 public:
  AgeBasis() = default;
  AgeBasis(int order, double t_max);

  int size() const { return order_ + 1; }
  const std::vector<double>& ages() const { return ages_; }
  double t_max() const { return t_max_; }

  VectorXd row(double tau) const;  // clamped to [1, t_max]
  VectorXd fit(const VectorXd& values_at_ages) const;
  double eval(const VectorXd& coef, double tau) const;

 private:
  int order_ = 0;
  double t_max_ = 0.0;
  std::vector<double> ages_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  double kappa(double tau) const { return 2.0 * (tau + 1.0) / (t_max_ + 1.0) - 1.0; }
};

// Reconstruct a full market state matching the sufficient statistics b, by
// scaling the reference state's mu-blocks (first durability level vs. the
// rest) with per-type factors (lambda1, lambda2).
MarketState lift_state(const SufficientState& b, const MarketState& reference,
                       const FailureModel& fm);

}  // namespace filament
