#include "filament/optim.hpp"

#include <algorithm>
#include <cmath>

namespace filament {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, double initial_step, double tol,
                             int max_eval) {
  const int n = static_cast<int>(start.size());
  NelderMeadResult res;
  std::vector<Eigen::VectorXd> x(n + 1, start);
  std::vector<double> fx(n + 1);
  for (int i = 1; i <= n; ++i) x[i](i - 1) += initial_step;
  for (int i = 0; i <= n; ++i) fx[i] = f(x[i]);
  res.evaluations = n + 1;

  const double a = 1.0, g = 2.0, r = 0.5, s = 0.5;
  while (res.evaluations < max_eval) {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int l, int rgt) { return fx[l] < fx[rgt]; });
    std::vector<Eigen::VectorXd> xs(n + 1);
    std::vector<double> fs(n + 1);
    for (int i = 0; i <= n; ++i) {
      xs[i] = x[idx[i]];
      fs[i] = fx[idx[i]];
    }
    x = xs;
    fx = fs;
    res.trace.push_back(fx[0]);

    double spread = 0.0;
    for (int i = 1; i <= n; ++i) spread = std::max(spread, (x[i] - x[0]).lpNorm<Eigen::Infinity>());
    if (std::abs(fx[n] - fx[0]) < tol && spread < tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += x[i];
    centroid /= n;

    Eigen::VectorXd xr = centroid + a * (centroid - x[n]);
    double fr = f(xr);
    ++res.evaluations;
    if (fr < fx[0]) {
      Eigen::VectorXd xe = centroid + g * (xr - centroid);
      double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        x[n] = xe;
        fx[n] = fe;
      } else {
        x[n] = xr;
        fx[n] = fr;
      }
    } else if (fr < fx[n - 1]) {
      x[n] = xr;
      fx[n] = fr;
    } else {
      Eigen::VectorXd xc = centroid + r * (x[n] - centroid);
      double fc = f(xc);
      ++res.evaluations;
      if (fc < fx[n]) {
        x[n] = xc;
        fx[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          x[i] = x[0] + s * (x[i] - x[0]);
          fx[i] = f(x[i]);
          ++res.evaluations;
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (fx[i] < fx[best]) best = i;
  res.x = x[best];
  res.value = fx[best];
  return res;
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace filament
