#include "filament/types.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace filament {

// Gauss-Hermite nodes/weights by Golub-Welsch on the Jacobi matrix.
std::vector<ConsumerType> discretize_types(double alpha_median, double sigma_alpha,
                                           int nodes, double usage) {
  if (alpha_median <= 0.0) throw std::invalid_argument("discretize_types: alpha_median <= 0");
  if (sigma_alpha < 0.0) throw std::invalid_argument("discretize_types: sigma_alpha < 0");
  if (nodes < 1) throw std::invalid_argument("discretize_types: nodes < 1");

  std::vector<ConsumerType> out(nodes);
  if (nodes == 1 || sigma_alpha == 0.0) {
    // Degenerate: all mass at the median. Keep the requested node count so
    // callers see a fixed layout, but weight only the first node.
    for (auto& t : out) {
      t.weight = 0.0;
      t.price_coef = alpha_median;
      t.usage = usage;
    }
    out[0].weight = 1.0;
    if (sigma_alpha == 0.0 && nodes > 1) out.resize(1);
    return out;
  }

  MatrixXd J = MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) {
    const double b = std::sqrt(k / 2.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
  const VectorXd x = es.eigenvalues();
  const MatrixXd v = es.eigenvectors();

  for (int k = 0; k < nodes; ++k) {
    const double w = v(0, k) * v(0, k);  // weights normalized to sum to one
    out[k].weight = w;
    out[k].price_coef = std::exp(std::log(alpha_median) + std::sqrt(2.0) * sigma_alpha * x(k));
    out[k].usage = usage;
  }
  return out;
}

}  // namespace filament
