#include "filament/approx.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace filament {

namespace cheb {

double T(int n, double x) {
  if (n == 0) return 1.0;
  if (n == 1) return x;
  double tm2 = 1.0, tm1 = x, t = x;
  for (int k = 2; k <= n; ++k) {
    t = 2.0 * x * tm1 - tm2;
    tm2 = tm1;
    tm1 = t;
  }
  return t;
}

// T_n' = n * U_{n-1}
double dT(int n, double x) {
  if (n == 0) return 0.0;
  if (n == 1) return 1.0;
  double um2 = 1.0, um1 = 2.0 * x, u = um1;  // U_0, U_1
  for (int k = 2; k < n; ++k) {
    u = 2.0 * x * um1 - um2;
    um2 = um1;
    um1 = u;
  }
  return n * um1;
}

std::vector<double> extrema(int n) {
  std::vector<double> x(n + 1);
  for (int j = 0; j <= n; ++j) x[j] = -std::cos(M_PI * j / n);
  x.front() = -1.0;
  x.back() = 1.0;
  if (n % 2 == 0) x[n / 2] = 0.0;
  return x;
}

}  // namespace cheb

namespace {

// Nested 1-D point sets: level 1 = {0}, level 2 adds {-1,1}, level 3 adds
// the order-4 extrema {-1/sqrt2, 1/sqrt2}.
const std::vector<std::vector<double>>& nested_new_points() {
  static const std::vector<std::vector<double>> pts = {
      {0.0}, {-1.0, 1.0}, {-std::sqrt(0.5), std::sqrt(0.5)}};
  return pts;
}

// New polynomial orders introduced at each 1-D level.
const std::vector<std::vector<int>>& nested_new_orders() {
  static const std::vector<std::vector<int>> ord = {{0}, {1, 2}, {3, 4}};
  return ord;
}

void enumerate_level_tuples(int dim, int budget, std::vector<int>& cur,
                            std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == dim) {
    out.push_back(cur);
    return;
  }
  for (int l = 1; l <= budget - (dim - static_cast<int>(cur.size()) - 1); ++l) {
    cur.push_back(l);
    enumerate_level_tuples(dim, budget - l, cur, out);
    cur.pop_back();
  }
}

}  // namespace

SmolyakBasis::SmolyakBasis(const VectorXd& lo, const VectorXd& hi, int level) {
  if (lo.size() != hi.size()) throw std::invalid_argument("SmolyakBasis: bound size mismatch");
  if (level < 1 || level > 2) throw std::invalid_argument("SmolyakBasis: level must be 1 or 2");
  for (int d = 0; d < lo.size(); ++d)
    if (!(hi(d) > lo(d))) throw std::invalid_argument("SmolyakBasis: zero-width bounds");
  lo_ = lo;
  hi_ = hi;
  const int dim = static_cast<int>(lo.size());

  // All per-dim level tuples with |levels| <= dim + level.
  std::vector<std::vector<int>> tuples;
  std::vector<int> cur;
  enumerate_level_tuples(dim, dim + level, cur, tuples);

  // Basis: union over tuples of tensor products of the new orders per level.
  // Nodes: same construction with the new points; nestedness makes the two
  // sets align one-to-one.
  std::set<std::vector<int>> order_set;
  std::set<std::vector<double>> node_set;
  for (const auto& tup : tuples) {
    std::vector<std::vector<int>> oidx(dim);
    std::vector<std::vector<double>> pidx(dim);
    for (int d = 0; d < dim; ++d) {
      oidx[d] = nested_new_orders()[tup[d] - 1];
      pidx[d] = nested_new_points()[tup[d] - 1];
    }
    std::vector<int> oc(dim, 0);
    std::function<void(int, std::vector<int>&, std::vector<double>&)> rec =
        [&](int d, std::vector<int>& os, std::vector<double>& ps) {
          if (d == dim) {
            order_set.insert(os);
            node_set.insert(ps);
            return;
          }
          for (size_t k = 0; k < oidx[d].size(); ++k) {
            os[d] = oidx[d][k];
            ps[d] = pidx[d][k];
            rec(d + 1, os, ps);
          }
        };
    std::vector<int> os(dim);
    std::vector<double> ps(dim);
    rec(0, os, ps);
  }

  orders_.assign(order_set.begin(), order_set.end());
  const int N = static_cast<int>(orders_.size());
  if (static_cast<int>(node_set.size()) != N)
    throw std::logic_error("SmolyakBasis: node/basis count mismatch");

  nodes_.resize(N, dim);
  int r = 0;
  for (const auto& p : node_set) {
    for (int d = 0; d < dim; ++d)
      nodes_(r, d) = lo_(d) + 0.5 * (p[d] + 1.0) * (hi_(d) - lo_(d));
    ++r;
  }

  MatrixXd colloc(N, N);
  for (int n = 0; n < N; ++n) colloc.row(n) = row(nodes_.row(n)).transpose();
  lu_ = Eigen::PartialPivLU<MatrixXd>(colloc);
}

VectorXd SmolyakBasis::row(const VectorXd& x) const {
  VectorXd out(size());
  for (int b = 0; b < size(); ++b) {
    double v = 1.0;
    for (int d = 0; d < dim(); ++d) {
      const int o = orders_[b][d];
      if (o > 0) v *= cheb::T(o, to_unit(x(d), d));
    }
    out(b) = v;
  }
  return out;
}

VectorXd SmolyakBasis::drow(const VectorXd& x, int dd) const {
  VectorXd out(size());
  const double scale = 2.0 / (hi_(dd) - lo_(dd));
  for (int b = 0; b < size(); ++b) {
    double v = 1.0;
    for (int d = 0; d < dim(); ++d) {
      const int o = orders_[b][d];
      const double u = to_unit(x(d), d);
      if (d == dd)
        v *= cheb::dT(o, u) * scale;
      else if (o > 0)
        v *= cheb::T(o, u);
    }
    out(b) = v;
  }
  return out;
}

VectorXd SmolyakBasis::fit(const VectorXd& node_values) const { return lu_.solve(node_values); }

double SmolyakBasis::eval(const VectorXd& coef, const VectorXd& x) const {
  return row(x).dot(coef);
}

VectorXd SmolyakBasis::grad(const VectorXd& coef, const VectorXd& x) const {
  VectorXd g(dim());
  for (int d = 0; d < dim(); ++d) g(d) = drow(x, d).dot(coef);
  return g;
}

bool SmolyakBasis::contains(const VectorXd& x, double slack) const {
  for (int d = 0; d < dim(); ++d)
    if (x(d) < lo_(d) - slack || x(d) > hi_(d) + slack) return false;
  return true;
}

VectorXd SmolyakBasis::clamp(const VectorXd& x) const {
  VectorXd y = x;
  for (int d = 0; d < dim(); ++d) y(d) = std::min(std::max(y(d), lo_(d)), hi_(d));
  return y;
}

AgeBasis::AgeBasis(int order, double t_max) : order_(order), t_max_(t_max) {
  if (order < 1) throw std::invalid_argument("AgeBasis: order must be >= 1");
  if (t_max <= 1.0) throw std::invalid_argument("AgeBasis: t_max must exceed 1");
  const double klo = kappa(1.0), khi = kappa(t_max_);
  const auto ext = cheb::extrema(order_);
  ages_.resize(order_ + 1);
  for (int m = 0; m <= order_; ++m) {
    const double k = klo + 0.5 * (ext[m] + 1.0) * (khi - klo);
    ages_[m] = std::min(std::max((k + 1.0) * (t_max_ + 1.0) / 2.0 - 1.0, 1.0), t_max_);
  }
  MatrixXd colloc(size(), size());
  for (int m = 0; m < size(); ++m) colloc.row(m) = row(ages_[m]).transpose();
  lu_ = Eigen::PartialPivLU<MatrixXd>(colloc);
}

VectorXd AgeBasis::row(double tau) const {
  tau = std::min(std::max(tau, 1.0), t_max_);
  const double k = kappa(tau);
  VectorXd out(size());
  for (int m = 0; m < size(); ++m) out(m) = cheb::T(m, k);
  return out;
}

VectorXd AgeBasis::fit(const VectorXd& values_at_ages) const { return lu_.solve(values_at_ages); }

double AgeBasis::eval(const VectorXd& coef, double tau) const { return row(tau).dot(coef); }

MarketState lift_state(const SufficientState& b, const MarketState& reference,
                       const FailureModel& fm) {
  const int I = fm.n_types();
  const int D = fm.n_durs();
  MarketState out = MarketState::empty(fm);
  for (int i = 0; i < I; ++i) {
    // Block masses and failure inflows of the reference state.
    double a1 = 0.0, a2 = 0.0, c1 = 0.0, c2 = 0.0;
    for (int d = 0; d < D; ++d) {
      const FailureLaw& law = fm.law(i, d);
      for (int a = 1; a <= law.t_max; ++a) {
        const double m = reference.inv[i][d][a];
        const double fail = m * (1.0 - law.cond_survival_next(a));
        if (d == 0) {
          a1 += m;
          c1 += fail;
        } else {
          a2 += m;
          c2 += fail;
        }
      }
    }
    double l1 = 0.0, l2 = 0.0;
    const double rhs1 = 1.0 - b.b1[i];
    const double rhs2 = b.b2[i];
    if (D == 1 || a2 == 0.0) {
      if (a1 <= 0.0) throw std::runtime_error("lift_state: degenerate reference block");
      l1 = rhs1 / a1;  // single-block case: match total mass only
      l2 = 0.0;
    } else {
      const double det = a1 * c2 - a2 * c1;
      if (a1 <= 0.0 || a2 <= 0.0 || std::abs(det) < 1e-14)
        throw std::runtime_error("lift_state: singular reference blocks");
      l1 = (rhs1 * c2 - a2 * rhs2) / det;
      l2 = (a1 * rhs2 - rhs1 * c1) / det;
    }
    out.pr0[i] = b.b1[i];
    for (int d = 0; d < D; ++d) {
      const double l = (d == 0) ? l1 : l2;
      const FailureLaw& law = fm.law(i, d);
      for (int a = 1; a <= law.t_max; ++a) out.inv[i][d][a] = l * reference.inv[i][d][a];
    }
  }
  return out;
}

}  // namespace filament
