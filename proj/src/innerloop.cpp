#include "filament/innerloop.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace filament {

namespace {

constexpr double kMassFloor = 1e-300;

double lse2(const std::vector<double>& xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

double safe_exp(double x) { return std::exp(std::min(x, 700.0)); }

[[noreturn]] void log_domain_error(const std::string& block, int j, int t) {
  throw std::domain_error("innerloop: log of a nonpositive value in block '" + block +
                          "' at (index " + std::to_string(j) + ", period " + std::to_string(t) +
                          ")");
}

}  // namespace

DemandPanel DemandPanel::from_data(std::vector<Product> products, int n_nests,
                                   const MatrixXd& price_data, const MatrixXd& share_data) {
  DemandPanel p;
  p.products = std::move(products);
  p.n_nests = n_nests;
  p.T = static_cast<int>(price_data.rows());
  const int J = static_cast<int>(p.products.size());
  p.price.resize(p.T + 1, J);
  p.share.resize(p.T + 1, J);
  p.price.row(0) = price_data.colwise().mean();
  p.share.row(0) = share_data.colwise().mean();
  p.price.bottomRows(p.T) = price_data;
  p.share.bottomRows(p.T) = share_data;

  p.share0.resize(p.T + 1);
  p.nest_share = MatrixXd::Zero(p.T + 1, n_nests);
  for (int t = 0; t <= p.T; ++t) {
    p.share0(t) = 1.0 - p.share.row(t).sum();
    for (int j = 0; j < J; ++j) p.nest_share(t, p.products[j].nest) += p.share(t, j);
  }
  p.validate();
  return p;
}

void DemandPanel::validate() const {
  if (share.minCoeff() <= 0.0) throw std::invalid_argument("panel: nonpositive product share");
  if (share0.minCoeff() <= 0.0) throw std::invalid_argument("panel: nonpositive outside share");
  if (nest_share.minCoeff() <= 0.0)
    throw std::invalid_argument("panel: every nest needs positive share in every period");
}

InnerLoop::InnerLoop(const DemandPanel& panel, const DemandParams& params,
                     const std::vector<ConsumerType>& types, const FailureModel& failure)
    : panel_(panel), params_(params), types_(types), failure_(failure) {
  panel_.validate();
  if (static_cast<int>(params_.rho.size()) != panel_.n_nests)
    throw std::invalid_argument("innerloop: rho size != nest count");
}

int InnerLoop::idxV(int i, int t) const { return i * (panel_.T + 1) + t; }
int InnerLoop::idxIV(int g, int i, int t) const {
  const int I = n_types(), P = panel_.T + 1;
  return I * P + (g * I + i) * P + t;
}
int InnerLoop::idxP(InnerAlgorithm alg, int i, int t) const {
  const int I = n_types(), P = panel_.T + 1, G = panel_.n_nests;
  const int J = panel_.n_products();
  const int mid = alg == InnerAlgorithm::Proposed ? G * I * P : J * P;
  return I * P + mid + i * P + t;
}
int InnerLoop::idxD(int j, int t) const {
  const int I = n_types(), P = panel_.T + 1;
  return I * P + j * P + t;
}

// kappa_{ijt} = -alpha_i p_jt + E[beta^L V(t+L)]; v0_{it} = beta * V(i, t+1).
// Column 0 is the stationary pseudo-period whose continuation is itself.
void InnerLoop::kappa_and_v0(const MatrixXd& V, MatrixXd& kappaR, MatrixXd& v0) const {
  const int I = n_types(), T = panel_.T, D = failure_.n_durs();
  kappaR.resize(I * D, T + 1);
  v0.resize(I, T + 1);
  const double beta = params_.beta_c;
  for (int i = 0; i < I; ++i) {
    v0(i, 0) = beta * V(i, 0);
    for (int t = 1; t <= T; ++t) v0(i, t) = beta * V(i, t < T ? t + 1 : 0);
    for (int d = 0; d < D; ++d) {
      const FailureLaw& law = failure_.law(i, d);
      kappaR(i * D + d, 0) = law.discount_factors(beta).expected_beta_l * V(i, 0);
      for (int t = 1; t <= T; ++t) {
        double r = 0.0, bt = 1.0;
        for (int tau = 1; tau <= law.t_max; ++tau) {
          bt *= beta;
          const int s = t + tau;
          r += bt * law.f[tau] * V(i, s <= T ? s : 0);
        }
        kappaR(i * D + d, t) = r;
      }
    }
  }
}

VectorXd InnerLoop::initial_state(InnerAlgorithm alg) const {
  const int I = n_types(), T = panel_.T, J = panel_.n_products(), G = panel_.n_nests;
  const int P = T + 1;

  // Pr0 from the stationary formula under uniform CCPs over J+1 alternatives.
  std::vector<double> pr0_init(I);
  for (int i = 0; i < I; ++i) {
    VectorXd by_dur = VectorXd::Zero(failure_.n_durs());
    for (int j = 0; j < J; ++j) by_dur(panel_.products[j].dur) += 1.0 / (J + 1);
    pr0_init[i] = stationary_pr0(by_dur, failure_, i);
  }

  if (alg == InnerAlgorithm::Proposed) {
    VectorXd z = VectorXd::Zero(I * P + G * I * P + I * P);
    MatrixXd V = MatrixXd::Zero(I, P), kappaR, v0;
    kappa_and_v0(V, kappaR, v0);
    const int D = failure_.n_durs();
    for (int t = 0; t < P; ++t)
      for (int i = 0; i < I; ++i) {
        for (int g = 0; g < G; ++g) {
          std::vector<double> terms;
          for (int j = 0; j < J; ++j) {
            if (panel_.products[j].nest != g) continue;
            const double kap = -types_[i].price_coef * panel_.price(t, j) +
                               kappaR(i * D + panel_.products[j].dur, t);
            terms.push_back(kap / (1.0 - params_.rho[g]));
          }
          z(idxIV(g, i, t)) = (1.0 - params_.rho[g]) * lse2(terms);
        }
        z(idxP(InnerAlgorithm::Proposed, i, t)) = std::log(pr0_init[i]);
      }
    return z;
  }

  VectorXd z = VectorXd::Zero(I * P + J * P + I * P);
  for (int t = 0; t < P; ++t)
    for (int i = 0; i < I; ++i) z(idxP(InnerAlgorithm::BlpContraction, i, t)) = std::log(pr0_init[i]);
  return z;
}

std::vector<Block> InnerLoop::blocks(InnerAlgorithm alg) const {
  const int I = n_types(), P = panel_.T + 1, J = panel_.n_products(), G = panel_.n_nests;
  if (alg == InnerAlgorithm::Proposed)
    return {{"V", 0, I * P}, {"IV", I * P, G * I * P}, {"logPr0", I * P + G * I * P, I * P}};
  return {{"V", 0, I * P}, {"delta", I * P, J * P}, {"logPr0", I * P + J * P, I * P}};
}

VectorXd InnerLoop::phi_d(const VectorXd& z) const {
  const int I = n_types(), T = panel_.T, J = panel_.n_products(), G = panel_.n_nests;
  const int P = T + 1, D = failure_.n_durs();

  MatrixXd V(I, P), logPr0(I, P);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < P; ++t) {
      V(i, t) = z(idxV(i, t));
      logPr0(i, t) = z(idxP(InnerAlgorithm::Proposed, i, t));
    }

  MatrixXd kappaR, v0;
  kappa_and_v0(V, kappaR, v0);

  VectorXd out = z;
  MatrixXd s_flow(I * D, P);     // s_{i mu t}: purchase flow by durability
  MatrixXd stilde_star(I, P);    // rescaled stay-out flow
  MatrixXd sccp_dur(I * D, P);   // CCPs aggregated by durability

  for (int t = 0; t < P; ++t) {
    // Up-to-scale CCPs and the analytic delta.
    MatrixXd log_shat(I, J), kap(I, J);
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) {
        const int g = panel_.products[j].nest;
        const double rho = params_.rho[g];
        kap(i, j) = -types_[i].price_coef * panel_.price(t, j) +
                    kappaR(i * D + panel_.products[j].dur, t);
        const double iv = z(idxIV(g, i, t));
        log_shat(i, j) = (kap(i, j) - iv) / (1.0 - rho) + iv - V(i, t);
      }

    VectorXd delta(J);
    for (int j = 0; j < J; ++j) {
      std::vector<double> terms(I);
      for (int i = 0; i < I; ++i)
        terms[i] = std::log(types_[i].weight) + logPr0(i, t) + log_shat(i, j);
      const double log_acc = lse2(terms);
      if (!std::isfinite(log_acc)) log_domain_error("delta", j, t);
      const double rho = params_.rho[panel_.products[j].nest];
      delta(j) = (1.0 - rho) * (std::log(panel_.share(t, j)) - log_acc);
    }

    // Scaled CCPs, flows by durability, outside pieces.
    sccp_dur.col(t).setZero();
    for (int i = 0; i < I; ++i) {
      const double pr0 = safe_exp(logPr0(i, t));
      for (int j = 0; j < J; ++j) {
        const double rho = params_.rho[panel_.products[j].nest];
        const double sccp = safe_exp(log_shat(i, j) + delta(j) / (1.0 - rho));
        sccp_dur(i * D + panel_.products[j].dur, t) += sccp;
      }
      for (int d = 0; d < D; ++d) s_flow(i * D + d, t) = pr0 * sccp_dur(i * D + d, t);
    }

    // IV update with the nest-level and outside-option correction terms.
    // Transient iterates can push the model outside share nonpositive; the
    // floor keeps the mapping total and is inactive at the fixed point.
    double c_t = 0.0;
    for (int i = 0; i < I; ++i) {
      const double pr0 = safe_exp(logPr0(i, t));
      c_t += types_[i].weight * (1.0 - pr0 + safe_exp(logPr0(i, t) + v0(i, t) - V(i, t)));
    }
    if (!std::isfinite(c_t)) log_domain_error("outside-correction", 0, t);
    if (c_t < kMassFloor) {
      c_t = kMassFloor;
      ++floor_hits_;
    }

    for (int g = 0; g < G; ++g) {
      std::vector<double> bterms(I);
      for (int i = 0; i < I; ++i)
        bterms[i] = std::log(types_[i].weight) + logPr0(i, t) + z(idxIV(g, i, t)) - V(i, t);
      const double log_b_gt = lse2(bterms);
      if (!std::isfinite(log_b_gt)) log_domain_error("nest-correction", g, t);
      const double rho = params_.rho[g];
      const double corr = rho * (std::log(panel_.nest_share(t, g)) - log_b_gt) -
                          (std::log(panel_.share0(t)) - std::log(c_t));
      for (int i = 0; i < I; ++i) {
        std::vector<double> terms;
        for (int j = 0; j < J; ++j)
          if (panel_.products[j].nest == g)
            terms.push_back((delta(j) + kap(i, j)) / (1.0 - rho));
        out(idxIV(g, i, t)) = (1.0 - rho) * lse2(terms) + corr;
      }
    }

    // V update uses the freshly updated inclusive values.
    for (int i = 0; i < I; ++i) {
      std::vector<double> terms = {v0(i, t)};
      for (int g = 0; g < G; ++g) terms.push_back(out(idxIV(g, i, t)));
      out(idxV(i, t)) = lse2(terms);
    }

    // Rescaled outside flow (step 2h).
    double num = panel_.share0(t) - 1.0, den = 0.0;
    for (int i = 0; i < I; ++i) {
      num += types_[i].weight * safe_exp(logPr0(i, t));
      den += types_[i].weight * safe_exp(logPr0(i, t) + v0(i, t) - V(i, t));
    }
    for (int i = 0; i < I; ++i) {
      const double stilde = safe_exp(logPr0(i, t) + v0(i, t) - V(i, t));
      double star = den > 0.0 ? stilde * num / den : 0.0;
      if (star < kMassFloor) {
        star = kMassFloor;
        ++floor_hits_;
      }
      stilde_star(i, t) = star;
    }
  }

  // Purchase-probability update: closed form in the stationary pseudo-period,
  // the unrolled history sum elsewhere.
  for (int i = 0; i < I; ++i) {
    VectorXd by_dur(D);
    for (int d = 0; d < D; ++d) by_dur(d) = sccp_dur(i * D + d, 0);
    double pr0_st = stationary_pr0(by_dur, failure_, i);
    out(idxP(InnerAlgorithm::Proposed, i, 0)) = std::log(std::max(pr0_st, kMassFloor));

    for (int t = 1; t <= T; ++t) {
      double pr0 = stilde_star(i, t - 1);
      for (int d = 0; d < D; ++d) {
        const FailureLaw& law = failure_.law(i, d);
        for (int lag = 1; lag < t && lag <= law.t_max + 1; ++lag)
          pr0 += s_flow(i * D + d, t - lag) * law.fail_mass_at_lag(lag);
        if (t - 1 <= law.t_max) pr0 += s_flow(i * D + d, 0) * law.phi[t - 1];
      }
      if (pr0 < kMassFloor) {
        pr0 = kMassFloor;
        ++floor_hits_;
      }
      out(idxP(InnerAlgorithm::Proposed, i, t)) = std::log(pr0);
    }
  }
  return out;
}

VectorXd InnerLoop::phi_blp(const VectorXd& z) const {
  const int I = n_types(), T = panel_.T, J = panel_.n_products(), G = panel_.n_nests;
  const int P = T + 1, D = failure_.n_durs();

  MatrixXd V(I, P), logPr0(I, P), delta(J, P);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < P; ++t) {
      V(i, t) = z(idxV(i, t));
      logPr0(i, t) = z(idxP(InnerAlgorithm::BlpContraction, i, t));
    }
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < P; ++t) delta(j, t) = z(idxD(j, t));

  MatrixXd kappaR, v0;
  kappa_and_v0(V, kappaR, v0);

  VectorXd out = z;
  MatrixXd s_flow(I * D, P), stilde(I, P), sccp_dur(I * D, P);

  for (int t = 0; t < P; ++t) {
    MatrixXd iv(I, G), log_sccp(I, J);
    for (int i = 0; i < I; ++i) {
      for (int g = 0; g < G; ++g) {
        std::vector<double> terms;
        for (int j = 0; j < J; ++j)
          if (panel_.products[j].nest == g) {
            const double kap = -types_[i].price_coef * panel_.price(t, j) +
                               kappaR(i * D + panel_.products[j].dur, t);
            terms.push_back((delta(j, t) + kap) / (1.0 - params_.rho[g]));
          }
        iv(i, g) = (1.0 - params_.rho[g]) * lse2(terms);
      }
      for (int j = 0; j < J; ++j) {
        const int g = panel_.products[j].nest;
        const double rho = params_.rho[g];
        const double kap = -types_[i].price_coef * panel_.price(t, j) +
                           kappaR(i * D + panel_.products[j].dur, t);
        log_sccp(i, j) = (delta(j, t) + kap - iv(i, g)) / (1.0 - rho) + iv(i, g) - V(i, t);
      }
    }

    // Damped BLP update on mean utilities.
    for (int j = 0; j < J; ++j) {
      std::vector<double> terms(I);
      for (int i = 0; i < I; ++i)
        terms[i] = std::log(types_[i].weight) + logPr0(i, t) + log_sccp(i, j);
      const double log_acc = lse2(terms);
      if (!std::isfinite(log_acc)) log_domain_error("delta", j, t);
      const double rho = params_.rho[panel_.products[j].nest];
      out(idxD(j, t)) =
          delta(j, t) + (1.0 - rho) * (std::log(panel_.share(t, j)) - log_acc);
    }

    // Value update with the current-iterate inclusive values.
    for (int i = 0; i < I; ++i) {
      std::vector<double> terms = {v0(i, t)};
      for (int g = 0; g < G; ++g) terms.push_back(iv(i, g));
      out(idxV(i, t)) = lse2(terms);
    }

    sccp_dur.col(t).setZero();
    for (int i = 0; i < I; ++i) {
      const double pr0 = safe_exp(logPr0(i, t));
      for (int j = 0; j < J; ++j)
        sccp_dur(i * D + panel_.products[j].dur, t) += safe_exp(log_sccp(i, j));
      for (int d = 0; d < D; ++d) s_flow(i * D + d, t) = pr0 * sccp_dur(i * D + d, t);
      stilde(i, t) = safe_exp(logPr0(i, t) + v0(i, t) - V(i, t));
    }
  }

  for (int i = 0; i < I; ++i) {
    VectorXd by_dur(D);
    for (int d = 0; d < D; ++d) by_dur(d) = sccp_dur(i * D + d, 0);
    out(idxP(InnerAlgorithm::BlpContraction, i, 0)) = std::log(std::max(stationary_pr0(by_dur, failure_, i), kMassFloor));
    for (int t = 1; t <= T; ++t) {
      double pr0 = stilde(i, t - 1);
      for (int d = 0; d < D; ++d) {
        const FailureLaw& law = failure_.law(i, d);
        for (int lag = 1; lag < t && lag <= law.t_max + 1; ++lag)
          pr0 += s_flow(i * D + d, t - lag) * law.fail_mass_at_lag(lag);
        if (t - 1 <= law.t_max) pr0 += s_flow(i * D + d, 0) * law.phi[t - 1];
      }
      if (pr0 < kMassFloor) {
        pr0 = kMassFloor;
        ++floor_hits_;
      }
      out(idxP(InnerAlgorithm::BlpContraction, i, t)) = std::log(pr0);
    }
  }
  return out;
}

MatrixXd InnerLoop::delta_of(InnerAlgorithm alg, const VectorXd& z) const {
  const int I = n_types(), T = panel_.T, J = panel_.n_products();
  const int P = T + 1, D = failure_.n_durs();
  MatrixXd delta(J, P);
  if (alg == InnerAlgorithm::BlpContraction) {
    for (int j = 0; j < J; ++j)
      for (int t = 0; t < P; ++t) delta(j, t) = z(idxD(j, t));
    return delta;
  }
  MatrixXd V(I, P);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < P; ++t) V(i, t) = z(idxV(i, t));
  MatrixXd kappaR, v0;
  kappa_and_v0(V, kappaR, v0);
  for (int t = 0; t < P; ++t)
    for (int j = 0; j < J; ++j) {
      const int g = panel_.products[j].nest;
      const double rho = params_.rho[g];
      double acc = 0.0;
      for (int i = 0; i < I; ++i) {
        const double kap = -types_[i].price_coef * panel_.price(t, j) +
                           kappaR(i * D + panel_.products[j].dur, t);
        const double iv = z(idxIV(g, i, t));
        const double log_shat = (kap - iv) / (1.0 - rho) + iv - V(i, t);
        acc += types_[i].weight * std::exp(z(idxP(alg, i, t)) + log_shat);
      }
      if (!(acc > 0.0)) log_domain_error("delta", j, t);
      delta(j, t) = (1.0 - rho) * (std::log(panel_.share(t, j)) - std::log(acc));
    }
  return delta;
}

InnerSolveResult InnerLoop::solve(InnerAlgorithm alg, const SpectralConfig& cfg) const {
  floor_hits_ = 0;
  const auto map = [&](const VectorXd& z) {
    return alg == InnerAlgorithm::Proposed ? phi_d(z) : phi_blp(z);
  };
  SpectralResult sr = spectral_iterate(map, initial_state(alg), blocks(alg), cfg);

  InnerSolveResult res;
  res.iterations = sr.iterations;
  res.residual = sr.residual;
  res.converged = sr.converged;
  res.residual_path = std::move(sr.residual_path);
  res.floor_hits = floor_hits_;
  res.delta = delta_of(alg, sr.z);

  const int I = n_types(), T = panel_.T, J = panel_.n_products();
  const int P = T + 1, D = failure_.n_durs();
  res.v.resize(I, P);
  res.pr0.resize(I, P);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < P; ++t) {
      res.v(i, t) = sr.z(idxV(i, t));
      res.pr0(i, t) = std::exp(sr.z(idxP(alg, i, t)));
    }

  // CCPs at the solution, from the full nested-logit evaluation.
  MatrixXd kappaR, v0;
  kappa_and_v0(res.v, kappaR, v0);
  std::vector<int> nest_of(J);
  for (int j = 0; j < J; ++j) nest_of[j] = panel_.products[j].nest;
  res.ccp.resize(P);
  for (int t = 0; t < P; ++t) {
    res.ccp[t].resize(J + 1, I);
    for (int i = 0; i < I; ++i) {
      VectorXd vt(J);
      for (int j = 0; j < J; ++j)
        vt(j) = -types_[i].price_coef * panel_.price(t, j) + res.delta(j, t) +
                kappaR(i * D + panel_.products[j].dur, t);
      ChoiceProbs cp = nested_logit(vt, v0(i, t), nest_of, params_.rho);
      res.ccp[t].col(i).head(J) = cp.ccp;
      res.ccp[t](J, i) = cp.ccp0;
    }
  }
  return res;
}

VectorXd InnerLoop::pack_state(InnerAlgorithm alg, const InnerSolveResult& sol) const {
  const int I = n_types(), T = panel_.T, J = panel_.n_products(), G = panel_.n_nests;
  const int P = T + 1, D = failure_.n_durs();
  VectorXd z = VectorXd::Zero(alg == InnerAlgorithm::Proposed ? I * P + G * I * P + I * P
                                                              : I * P + J * P + I * P);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < P; ++t) {
      z(idxV(i, t)) = sol.v(i, t);
      z(idxP(alg, i, t)) = std::log(sol.pr0(i, t));
    }
  if (alg == InnerAlgorithm::BlpContraction) {
    for (int j = 0; j < J; ++j)
      for (int t = 0; t < P; ++t) z(idxD(j, t)) = sol.delta(j, t);
    return z;
  }
  MatrixXd kappaR, v0;
  kappa_and_v0(sol.v, kappaR, v0);
  for (int t = 0; t < P; ++t)
    for (int g = 0; g < G; ++g)
      for (int i = 0; i < I; ++i) {
        std::vector<double> terms;
        for (int j = 0; j < J; ++j)
          if (panel_.products[j].nest == g) {
            const double kap = -types_[i].price_coef * panel_.price(t, j) +
                               kappaR(i * D + panel_.products[j].dur, t);
            terms.push_back((sol.delta(j, t) + kap) / (1.0 - params_.rho[g]));
          }
        z(idxIV(g, i, t)) = (1.0 - params_.rho[g]) * lse2(terms);
      }
  return z;
}

InnerLoop::ModelShares InnerLoop::model_shares(const InnerSolveResult& sol) const {
  const int I = n_types(), T = panel_.T, J = panel_.n_products(), G = panel_.n_nests;
  ModelShares ms;
  ms.share = MatrixXd::Zero(T + 1, J);
  ms.nest_share = MatrixXd::Zero(T + 1, G);
  ms.share0 = VectorXd::Zero(T + 1);
  for (int t = 0; t <= T; ++t) {
    double outside = 0.0;
    for (int i = 0; i < I; ++i) {
      const double w = types_[i].weight, pr0 = sol.pr0(i, t);
      for (int j = 0; j < J; ++j) {
        ms.share(t, j) += w * pr0 * sol.ccp[t](j, i);
        ms.nest_share(t, panel_.products[j].nest) += w * pr0 * sol.ccp[t](j, i);
      }
      outside += w * (1.0 - pr0 + pr0 * sol.ccp[t](J, i));
    }
    ms.share0(t) = outside;
  }
  return ms;
}

SimulatedDemand simulate_demand(const std::vector<Product>& products, int n_nests,
                                const MatrixXd& delta, const MatrixXd& price,
                                const DemandParams& params,
                                const std::vector<ConsumerType>& types,
                                const FailureModel& failure) {
  const int J = static_cast<int>(products.size());
  const int I = static_cast<int>(types.size());
  const int P = static_cast<int>(delta.cols());
  const int T = P - 1;
  const int D = failure.n_durs();
  const double beta = params.beta_c;

  std::vector<int> nest_of(J);
  for (int j = 0; j < J; ++j) nest_of[j] = products[j].nest;

  SimulatedDemand out;
  out.v.resize(I, P);

  // Stationary consumer value per type: Newton on V = LSE(beta V, IV(V)).
  std::vector<VectorXd> ebl(I, VectorXd(D));
  for (int i = 0; i < I; ++i)
    for (int d = 0; d < D; ++d)
      ebl[i](d) = failure.law(i, d).discount_factors(beta).expected_beta_l;

  for (int i = 0; i < I; ++i) {
    double v = 0.0;
    for (int it = 0; it < 300; ++it) {
      VectorXd vt(J);
      for (int j = 0; j < J; ++j)
        vt(j) = -types[i].price_coef * price(0, j) + delta(j, 0) + ebl[i](products[j].dur) * v;
      ChoiceProbs cp = nested_logit(vt, beta * v, nest_of, params.rho);
      double drhs = cp.ccp0 * beta;
      for (int j = 0; j < J; ++j) drhs += cp.ccp(j) * ebl[i](products[j].dur);
      const double res = cp.v - v;
      if (std::abs(res) < 1e-14) break;
      v = v + res / (1.0 - drhs);
    }
    out.v(i, 0) = v;
  }

  // Backward pass over data periods: continuation beyond T is stationary.
  auto v_at = [&](int i, int s) { return s <= T ? out.v(i, s) : out.v(i, 0); };
  for (int t = T; t >= 1; --t) {
    for (int i = 0; i < I; ++i) {
      VectorXd vt(J);
      for (int j = 0; j < J; ++j) {
        const FailureLaw& law = failure.law(i, products[j].dur);
        double r = 0.0, bt = 1.0;
        for (int tau = 1; tau <= law.t_max; ++tau) {
          bt *= beta;
          r += bt * law.f[tau] * (t + tau <= T ? out.v(i, t + tau) : out.v(i, 0));
        }
        vt(j) = -types[i].price_coef * price(t, j) + delta(j, t) + r;
      }
      const double v0 = beta * v_at(i, t + 1);
      out.v(i, t) = nested_logit(vt, v0, nest_of, params.rho).v;
    }
  }

  // CCPs everywhere, then roll the inventory state forward from the
  // stationary seed.
  std::vector<std::vector<ChoiceProbs>> ccp(P, std::vector<ChoiceProbs>(I));
  for (int t = 0; t < P; ++t)
    for (int i = 0; i < I; ++i) {
      VectorXd vt(J);
      for (int j = 0; j < J; ++j) {
        const FailureLaw& law = failure.law(i, products[j].dur);
        double r = 0.0, bt = 1.0;
        if (t == 0) {
          r = ebl[i](products[j].dur) * out.v(i, 0);
        } else {
          for (int tau = 1; tau <= law.t_max; ++tau) {
            bt *= beta;
            r += bt * law.f[tau] * (t + tau <= T ? out.v(i, t + tau) : out.v(i, 0));
          }
        }
        vt(j) = -types[i].price_coef * price(t, j) + delta(j, t) + r;
      }
      const double v0 = beta * (t == 0 ? out.v(i, 0) : v_at(i, t + 1));
      ccp[t][i] = nested_logit(vt, v0, nest_of, params.rho);
    }

  auto by_dur = [&](int t) {
    std::vector<VectorXd> bd(I, VectorXd::Zero(D));
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) bd[i](products[j].dur) += ccp[t][i].ccp(j);
    return bd;
  };
  auto ccp0_of = [&](int t) {
    std::vector<double> c(I);
    for (int i = 0; i < I; ++i) c[i] = ccp[t][i].ccp0;
    return c;
  };

  MarketState state = stationary_state(by_dur(0), failure);

  out.share = MatrixXd::Zero(P, J);
  out.share0 = VectorXd::Zero(P);
  out.nest_share = MatrixXd::Zero(P, n_nests);
  out.pr0.resize(I, P);

  for (int i = 0; i < I; ++i) out.pr0(i, 0) = state.pr0[i];
  for (int t = 0; t < P; ++t) {
    if (t >= 1) {
      for (int i = 0; i < I; ++i) out.pr0(i, t) = state.pr0[i];
      out.states.push_back(state);
    }
    double outside = 0.0;
    for (int i = 0; i < I; ++i) {
      const double w = types[i].weight, pr0 = out.pr0(i, t);
      for (int j = 0; j < J; ++j) {
        out.share(t, j) += w * pr0 * ccp[t][i].ccp(j);
        out.nest_share(t, products[j].nest) += w * pr0 * ccp[t][i].ccp(j);
      }
      outside += w * (1.0 - pr0 + pr0 * ccp[t][i].ccp0);
    }
    out.share0(t) = outside;
    if (t >= 1 && t < P - 1) state = advance_state(state, by_dur(t), ccp0_of(t), failure);
  }
  return out;
}

}  // namespace filament
