#include "filament/demand.hpp"

#include <cmath>
#include <stdexcept>

namespace filament {

MarketState MarketState::empty(const FailureModel& fm) {
  MarketState s;
  const int I = fm.n_types();
  const int D = fm.n_durs();
  s.pr0.assign(I, 1.0);
  s.inv.resize(I);
  for (int i = 0; i < I; ++i) {
    s.inv[i].resize(D);
    for (int d = 0; d < D; ++d) s.inv[i][d].assign(fm.law(i, d).t_max + 1, 0.0);
  }
  return s;
}

double MarketState::total_mass(int type) const {
  double m = pr0[type];
  for (const auto& byage : inv[type])
    for (size_t a = 1; a < byage.size(); ++a) m += byage[a];
  return m;
}

VectorXd SufficientState::flat() const {
  VectorXd x(2 * b1.size());
  for (size_t i = 0; i < b1.size(); ++i) {
    x(2 * i) = b1[i];
    x(2 * i + 1) = b2[i];
  }
  return x;
}

SufficientState SufficientState::from_flat(const VectorXd& x) {
  SufficientState s;
  const int I = static_cast<int>(x.size() / 2);
  s.b1.resize(I);
  s.b2.resize(I);
  for (int i = 0; i < I; ++i) {
    s.b1[i] = x(2 * i);
    s.b2[i] = x(2 * i + 1);
  }
  return s;
}

ChoiceProbs nested_logit(const VectorXd& vtilde, double vtilde0,
                         const std::vector<int>& nest_of, const std::vector<double>& rho) {
  const int J = static_cast<int>(vtilde.size());
  const int G = static_cast<int>(rho.size());
  for (double r : rho)
    if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("nested_logit: rho must be in [0,1)");
  if (!vtilde.allFinite() || !std::isfinite(vtilde0))
    throw std::invalid_argument("nested_logit: non-finite choice value");

  ChoiceProbs cp;
  cp.ccp.resize(J);
  cp.within.resize(J);
  cp.iv.resize(G);

  // Nest-level log-sum-exp of vtilde/(1-rho_g).
  std::vector<double> lse(G, 0.0), mx(G, -std::numeric_limits<double>::infinity());
  std::vector<bool> used(G, false);
  for (int j = 0; j < J; ++j) {
    const int g = nest_of[j];
    used[g] = true;
    mx[g] = std::max(mx[g], vtilde(j) / (1.0 - rho[g]));
  }
  std::vector<double> sum(G, 0.0);
  for (int j = 0; j < J; ++j) {
    const int g = nest_of[j];
    sum[g] += std::exp(vtilde(j) / (1.0 - rho[g]) - mx[g]);
  }
  for (int g = 0; g < G; ++g) {
    if (!used[g]) {
      cp.iv(g) = -std::numeric_limits<double>::infinity();
      continue;
    }
    lse[g] = mx[g] + std::log(sum[g]);
    cp.iv(g) = (1.0 - rho[g]) * lse[g];
  }

  // Top level over {outside} + nests.
  double top_mx = vtilde0;
  for (int g = 0; g < G; ++g)
    if (used[g]) top_mx = std::max(top_mx, cp.iv(g));
  double top_sum = std::exp(vtilde0 - top_mx);
  for (int g = 0; g < G; ++g)
    if (used[g]) top_sum += std::exp(cp.iv(g) - top_mx);
  cp.v = top_mx + std::log(top_sum);

  cp.ccp0 = std::exp(vtilde0 - cp.v);
  for (int j = 0; j < J; ++j) {
    const int g = nest_of[j];
    cp.within(j) = std::exp(vtilde(j) / (1.0 - rho[g]) - lse[g]);
    cp.ccp(j) = cp.within(j) * std::exp(cp.iv(g) - cp.v);
  }
  return cp;
}

MatrixXd nested_logit_jacobian(const ChoiceProbs& cp, const std::vector<int>& nest_of,
                               const std::vector<double>& rho) {
  const int J = static_cast<int>(cp.ccp.size());
  MatrixXd jac(J + 1, J + 1);
  for (int j = 0; j < J; ++j) {
    const int g = nest_of[j];
    for (int k = 0; k < J; ++k) {
      double d = -cp.ccp(k);
      if (nest_of[k] == g) {
        d += cp.within(k);
        d += ((k == j ? 1.0 : 0.0) - cp.within(k)) / (1.0 - rho[g]);
      }
      jac(j, k) = cp.ccp(j) * d;
    }
    jac(j, J) = -cp.ccp(j) * cp.ccp0;  // d ccp_j / d vtilde0
  }
  for (int k = 0; k < J; ++k) jac(J, k) = -cp.ccp0 * cp.ccp(k);
  jac(J, J) = cp.ccp0 * (1.0 - cp.ccp0);
  return jac;
}

double purchase_prob(const std::vector<VectorXd>& past_purchases,
                     const VectorXd& stationary_purchases, double stilde0_prev,
                     const FailureModel& fm, int type) {
  const int D = fm.n_durs();
  const int H = static_cast<int>(past_purchases.size());
  double pr0 = stilde0_prev;
  for (int d = 0; d < D; ++d) {
    const FailureLaw& law = fm.law(type, d);
    for (int lag = 1; lag <= H; ++lag) {
      if (static_cast<int>(past_purchases[lag - 1].size()) != D)
        throw std::invalid_argument("purchase_prob: inconsistent history length");
      pr0 += past_purchases[lag - 1](d) * law.fail_mass_at_lag(lag);
    }
    // Pre-history periods carry the stationary purchase flow; products bought
    // at lag > H fail today with total mass phi(H).
    if (H <= law.t_max) pr0 += stationary_purchases(d) * law.phi[H];
  }
  return pr0;
}

double stationary_pr0(const VectorXd& ccp_by_dur, const FailureModel& fm, int type) {
  double denom = 1.0;
  for (int d = 0; d < fm.n_durs(); ++d) {
    const FailureLaw& law = fm.law(type, d);
    double sphi = 0.0;
    for (int tau = 1; tau <= law.t_max; ++tau) sphi += law.phi[tau];
    denom += ccp_by_dur(d) * sphi;
  }
  return 1.0 / denom;
}

VectorXd aggregate_shares(const std::vector<ConsumerType>& types,
                          const std::vector<double>& pr0,
                          const std::vector<VectorXd>& ccp_by_type) {
  VectorXd s = VectorXd::Zero(ccp_by_type[0].size());
  for (size_t i = 0; i < types.size(); ++i) s += types[i].weight * pr0[i] * ccp_by_type[i];
  return s;
}

MarketState advance_state(const MarketState& state,
                          const std::vector<VectorXd>& ccp_by_dur,
                          const std::vector<double>& ccp0, const FailureModel& fm) {
  const int I = fm.n_types();
  const int D = fm.n_durs();
  MarketState next = MarketState::empty(fm);
  for (int i = 0; i < I; ++i) {
    double p0 = state.pr0[i] * ccp0[i];
    for (int d = 0; d < D; ++d) {
      const FailureLaw& law = fm.law(i, d);
      const double buy = state.pr0[i] * ccp_by_dur[i](d);
      // New purchases: survive the first month into age 1 or fail back out.
      next.inv[i][d][1] = buy * law.phi[1];
      p0 += buy * (1.0 - law.phi[1]);
      for (int a = 1; a <= law.t_max; ++a) {
        const double mass = state.inv[i][d][a];
        if (mass == 0.0) continue;
        const double cs = law.cond_survival_next(a);
        if (a < law.t_max) next.inv[i][d][a + 1] += mass * cs;
        p0 += mass * (1.0 - cs);
      }
    }
    next.pr0[i] = p0;
    const double leak = std::abs(next.total_mass(i) - state.total_mass(i));
    if (leak > 1e-10) throw std::runtime_error("advance_state: mass leak " + std::to_string(leak));
  }
  return next;
}

MarketState stationary_state(const std::vector<VectorXd>& ccp_by_dur,
                             const FailureModel& fm) {
  const int I = fm.n_types();
  const int D = fm.n_durs();
  MarketState s = MarketState::empty(fm);
  for (int i = 0; i < I; ++i) {
    const double pr0 = stationary_pr0(ccp_by_dur[i], fm, i);
    s.pr0[i] = pr0;
    for (int d = 0; d < D; ++d) {
      const FailureLaw& law = fm.law(i, d);
      for (int tau = 1; tau <= law.t_max; ++tau)
        s.inv[i][d][tau] = pr0 * ccp_by_dur[i](d) * law.phi[tau];
    }
  }
  return s;
}

SufficientState compress_state(const MarketState& state, const FailureModel& fm) {
  SufficientState out;
  const int I = fm.n_types();
  out.b1.resize(I);
  out.b2.assign(I, 0.0);
  for (int i = 0; i < I; ++i) {
    out.b1[i] = state.pr0[i];
    for (int d = 0; d < fm.n_durs(); ++d) {
      const FailureLaw& law = fm.law(i, d);
      for (int a = 1; a <= law.t_max; ++a)
        out.b2[i] += state.inv[i][d][a] * (1.0 - law.cond_survival_next(a));
    }
  }
  return out;
}

}  // namespace filament
