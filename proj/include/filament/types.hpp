#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace filament {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// A discretized heterogeneity point of the consumer distribution.
struct ConsumerType {
  double weight = 1.0;      // w_i, fraction of consumers of this type
  double price_coef = 1.0;  // alpha_i > 0, utils per yen
  double usage = 76.94;     // I_i, expected usage hours per month
};

// A sellable good. Nest and durability are fixed over the product's life.
struct Product {
  int id = 0;
  int firm = 0;
  int nest = 0;      // index into the nest list (0 = Inc, 1 = CFL by convention)
  int dur = 0;       // index into the durability-level list
  double mu = 0.0;   // rated average lifetime, hours
  VectorXd x_demand; // mean-utility covariates X^D
  VectorXd x_cost;   // cost covariates X^mc
  std::string label;
};

// Utility-side parameters shared by demand, estimation and equilibrium code.
struct DemandParams {
  VectorXd theta_linear;        // coefficients on X^D
  double alpha_median = 1.0;    // median of the log-normal price coefficient
  double sigma_alpha = 0.0;     // log-scale of the price coefficient
  std::vector<double> rho;      // nest parameters, one per nest, each in [0,1)
  double beta_c = 0.99;         // consumer discount factor
  double market_size = 1.0;     // M, number of sockets
};

// Gauss-Hermite discretization of the log-normal price coefficient.
// With sigma_alpha == 0 this collapses every node onto the median.
std::vector<ConsumerType> discretize_types(double alpha_median, double sigma_alpha,
                                           int nodes, double usage = 76.94);

}  // namespace filament
