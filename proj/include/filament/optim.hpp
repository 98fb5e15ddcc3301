#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace filament {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> trace;  // best value per iteration
};

// Derivative-free simplex minimizer. Deterministic for a fixed start.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, double initial_step = 0.1,
                             double tol = 1e-10, int max_eval = 20000);

// Golden-section minimizer on [lo, hi] for a unimodal objective.
double golden_section(const std::function<double(double)>& f, double lo, double hi,
                      double tol = 1e-10);

}  // namespace filament
