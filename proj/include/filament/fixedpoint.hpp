#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace filament {

// Contiguous slice of the iteration vector treated as one variable type for
// the per-block spectral step.
struct Block {
  std::string name;
  int offset = 0;
  int size = 0;
};

struct SpectralConfig {
  double alpha0 = 0.1;      // first step size
  double tol = 1e-13;       // sup-norm residual
  int max_iter = 100000;    // mapping applications
  double alpha_cap = 1e3;   // |alpha| kept within [1/alpha_cap, alpha_cap]
  bool record_path = false;
};

struct SpectralResult {
  Eigen::VectorXd z;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> residual_path;
};

// z <- z - alpha_m (z - F(z)) with the Varadhan-Roland sign rule
// alpha_m = sgn(s'y) ||s|| / ||y|| per block. Non-convergence returns the
// best iterate with converged = false.
SpectralResult spectral_iterate(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map,
                                const Eigen::VectorXd& z0, const std::vector<Block>& blocks,
                                const SpectralConfig& cfg = {});

// Plain fixed-point iteration, used as a cross-check oracle.
SpectralResult plain_iterate(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map,
                             const Eigen::VectorXd& z0, double tol = 1e-13,
                             int max_iter = 200000);

}  // namespace filament
