#include "filament/fixedpoint.hpp"

#include <cmath>

namespace filament {

using Eigen::VectorXd;

SpectralResult spectral_iterate(const std::function<VectorXd(const VectorXd&)>& map,
                                const VectorXd& z0, const std::vector<Block>& blocks,
                                const SpectralConfig& cfg) {
  SpectralResult res;
  VectorXd z = z0;
  VectorXd fz = map(z);
  res.iterations = 1;
  VectorXd z_prev, fz_prev;
  double best_resid = (z - fz).lpNorm<Eigen::Infinity>();
  VectorXd best_z = fz;

  while (true) {
    const VectorXd resid = z - fz;
    const double rn = resid.lpNorm<Eigen::Infinity>();
    if (cfg.record_path) res.residual_path.push_back(rn);
    if (rn <= best_resid) {
      best_resid = rn;
      best_z = z;
    }
    if (rn < cfg.tol) {
      res.z = z;
      res.residual = rn;
      res.converged = true;
      return res;
    }
    if (res.iterations >= cfg.max_iter) {
      res.z = best_z;
      res.residual = best_resid;
      res.converged = false;
      return res;
    }

    VectorXd z_next = z;
    for (const auto& b : blocks) {
      double alpha = cfg.alpha0;
      if (z_prev.size() > 0) {
        // Barzilai-Borwein-type scalar step on the residual map g = z - F(z):
        // alpha = sgn(s'y) ||s||/||y|| with y the change in g, so that alpha
        // approximates the inverse Jacobian of g.
        const VectorXd s = z.segment(b.offset, b.size) - z_prev.segment(b.offset, b.size);
        const VectorXd y = s - (fz.segment(b.offset, b.size) - fz_prev.segment(b.offset, b.size));
        const double sn = s.norm(), yn = y.norm();
        if (yn > 0.0 && sn > 0.0) {
          const double sy = s.dot(y);
          alpha = (sy >= 0.0 ? 1.0 : -1.0) * sn / yn;
          const double mag = std::abs(alpha);
          if (mag > cfg.alpha_cap) alpha *= cfg.alpha_cap / mag;
          if (mag < 1.0 / cfg.alpha_cap) alpha *= (1.0 / cfg.alpha_cap) / mag;
        } else {
          alpha = 1.0;
        }
      }
      z_next.segment(b.offset, b.size) =
          z.segment(b.offset, b.size) - alpha * resid.segment(b.offset, b.size);
    }

    z_prev = z;
    fz_prev = fz;
    z = z_next;
    // A spectral step can extrapolate outside the mapping's domain; fall back
    // to the plain update for this iteration when that happens.
    try {
      fz = map(z);
    } catch (const std::exception&) {
      z = fz_prev;
      fz = map(z);
    }
    ++res.iterations;
  }
}

SpectralResult plain_iterate(const std::function<VectorXd(const VectorXd&)>& map,
                             const VectorXd& z0, double tol, int max_iter) {
  SpectralResult res;
  VectorXd z = z0;
  while (res.iterations < max_iter) {
    VectorXd fz = map(z);
    ++res.iterations;
    res.residual = (z - fz).lpNorm<Eigen::Infinity>();
    z = fz;
    if (res.residual < tol) {
      res.converged = true;
      break;
    }
  }
  res.z = z;
  return res;
}

}  // namespace filament
