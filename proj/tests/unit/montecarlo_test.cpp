#include <cmath>
#include <map>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "mlate/errors.hpp"
#include "mlate/montecarlo.hpp"

using namespace mlate;

namespace {

double Phi(double x) { return boost::math::cdf(boost::math::normal(), x); }

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

const Simulation& big(int id) {
  static std::map<int, Simulation> cache;
  auto it = cache.find(id);
  if (it == cache.end()) it = cache.emplace(id, generate(design(id), 1000000, 77, 0)).first;
  return it->second;
}

}  // namespace

TEST(Design, Table) {
  for (int id = 1; id <= 6; ++id) {
    const DesignSpec d = design(id);
    EXPECT_EQ(d.id, id);
    EXPECT_EQ(d.m_t, 0.25);
    EXPECT_EQ(d.outcome, id % 2 ? OutcomeRule::Homogeneous : OutcomeRule::HeterogeneousU2);
  }
  EXPECT_EQ(design(1).v_role, VRole::Covariate);
  EXPECT_EQ(design(3).v_role, VRole::Instrument);
  EXPECT_EQ(design(5).v_role, VRole::RepeatedMeasure);
  EXPECT_EQ(design(6).v_flip, 0.3);
  EXPECT_THROW(design(0), Error);
  EXPECT_THROW(design(7), Error);
}

TEST(Generate, Deterministic) {
  const Simulation a = generate(design(2), 500, 5, 3), b = generate(design(2), 500, 5, 3);
  const Simulation c = generate(design(2), 500, 5, 4);
  ASSERT_EQ(a.data.size(), 500u);
  bool differs = false;
  for (std::size_t i = 0; i < 500; ++i) {
    EXPECT_EQ(a.data.rows[i].y, b.data.rows[i].y);
    EXPECT_EQ(a.data.rows[i].t, b.data.rows[i].t);
    EXPECT_EQ(a.latent[i].u1, b.latent[i].u1);
    differs = differs || a.data.rows[i].y != c.data.rows[i].y;
  }
  EXPECT_TRUE(differs);
}

TEST(Generate, LatentRecordIsConsistent) {
  for (int id = 1; id <= 6; ++id) {
    const Simulation s = generate(design(id), 2000, 1, 0);
    for (std::size_t i = 0; i < s.latent.size(); ++i) {
      const LatentDraw& l = s.latent[i];
      const Observation& o = s.data.rows[i];
      EXPECT_EQ(o.y, l.t_star ? l.y1 : l.y0);
      EXPECT_EQ(l.u_t, l.t - l.t_star);
      EXPECT_EQ(o.t, l.t);
      EXPECT_EQ(o.z, l.z);
    }
  }
}

TEST(Generate, MisclassificationRates) {
  const Simulation& s = big(1);
  double flips[2] = {0, 0}, n[2] = {0, 0};
  for (const auto& l : s.latent) {
    n[l.t_star] += 1;
    flips[l.t_star] += l.t != l.t_star;
  }
  for (int t = 0; t < 2; ++t) EXPECT_NEAR(flips[t] / n[t], 0.25, 0.002);
}

TEST(Generate, FirstStageAndLatentProbabilities) {
  for (int id : {1, 2, 3, 4}) {
    const Simulation& s = id == 1 ? big(1) : generate(design(id), 1000000, 78, 0);
    double ts[2] = {0, 0}, n[2] = {0, 0};
    for (const auto& l : s.latent) {
      n[l.z] += 1;
      ts[l.z] += l.t_star;
    }
    for (int z = 0; z < 2; ++z) {
      const double truth = 0.5 * (Phi(z - 1.0) + Phi(z));
      const double se = std::sqrt(truth * (1 - truth) / n[z]);
      EXPECT_NEAR(ts[z] / n[z], truth, 3 * se);
    }
    EXPECT_NEAR(ts[1] / n[1] - ts[0] / n[0], 0.3413, 0.002);
  }
}

TEST(Generate, ErrorCovariance) {
  const Simulation& s = big(1);
  double s11 = 0, s22 = 0, s12 = 0;
  for (const auto& l : s.latent) {
    s11 += l.u1 * l.u1;
    s22 += l.u2 * l.u2;
    s12 += l.u1 * l.u2;
  }
  const double n = static_cast<double>(s.latent.size());
  EXPECT_NEAR(s11 / n, 1.0, 0.005);
  EXPECT_NEAR(s22 / n, kU2Variance, 0.003);
  EXPECT_NEAR(s12 / n, kU12Covariance, 0.003);
}

TEST(Generate, RepeatedMeasureFlipsAreIndependent) {
  for (int id : {5, 6}) {
    const Simulation s = generate(design(id), 1000000, 79, 0);
    std::vector<double> vflip, tflip, u1, u2, z;
    for (const auto& l : s.latent) {
      vflip.push_back(l.v != l.t_star);
      tflip.push_back(l.t != l.t_star);
      u1.push_back(l.u1);
      u2.push_back(l.u2);
      z.push_back(l.z);
    }
    double rate = 0;
    for (double f : vflip) rate += f;
    EXPECT_NEAR(rate / static_cast<double>(vflip.size()), 0.3, 0.002);
    for (const auto* other : {&tflip, &u1, &u2, &z}) EXPECT_LT(std::abs(correlation(vflip, *other)), 0.005);
    for (const auto* other : {&u1, &u2, &z}) EXPECT_LT(std::abs(correlation(tflip, *other)), 0.005);
  }
}

TEST(Generate, NoDefiers) {
  for (int id = 1; id <= 6; ++id) {
    const DesignSpec d = design(id);
    const Simulation s = generate(d, 20000, 2, 0);
    const double vc = d.v_role == VRole::RepeatedMeasure ? 0.0 : d.v_coef;
    std::size_t defiers = 0;
    for (const auto& l : s.latent) {
      const int t0 = d.intercept + vc * l.v - l.u1 > 0;
      const int t1 = d.intercept + d.z_coef + vc * l.v - l.u1 > 0;
      defiers += t0 == 1 && t1 == 0;
      EXPECT_EQ(l.t_star, l.z ? t1 : t0);
    }
    EXPECT_EQ(defiers, 0u);
  }
}

TEST(TrueParams, FirstStageAndLate) {
  const double dp14 = 0.5 * (Phi(0) + Phi(1)) - 0.5 * (Phi(-1) + Phi(0));
  const double dp56 = Phi(0.5) - Phi(-0.5);
  for (int id = 1; id <= 6; ++id) {
    const ParamVector th = true_params(design(id));
    EXPECT_EQ(th.beta_star, 1.0);
    EXPECT_EQ(th.m0[0], 0.25);
    EXPECT_EQ(th.m1[1], 0.25);
    EXPECT_NEAR(th.delta_p_star, id <= 4 ? dp14 : dp56, 1e-12);
    EXPECT_TRUE(th.violations().empty());
  }
  EXPECT_NEAR(true_params(design(1)).delta_p_star, 0.341, 5e-4);
  EXPECT_NEAR(true_params(design(5)).delta_p_star, 0.382, 1e-3);
  EXPECT_NEAR(true_params(design(1)).p_star[0][0], Phi(-1), 1e-15);
}

TEST(TrueParams, ContrastsMatchSimulation) {
  for (int id : {1, 2, 5, 6}) {
    const DesignSpec d = design(id);
    const ParamVector th = true_params(d);
    const VProbabilities vp = v_probabilities(d);
    const Simulation s = generate(d, 1000000, 80, 0);
    for (int z = 0; z < 2; ++z) {
      double sum[2][2] = {{0, 0}, {0, 0}}, cnt[2][2] = {{0, 0}, {0, 0}};
      for (const auto& l : s.latent) {
        if (l.z != z) continue;
        const double y = l.t_star ? l.y1 : l.y0;
        sum[l.v][l.t_star] += y;
        cnt[l.v][l.t_star] += 1;
      }
      double tau = 0;
      for (int v = 0; v < 2; ++v) tau += vp[z][v] * (sum[v][1] / cnt[v][1] - sum[v][0] / cnt[v][0]);
      EXPECT_NEAR(tau, th.tau_star[z], 0.015) << "design " << id << " z " << z;
    }
  }
}

TEST(ComplierLate, MatchesSimulation) {
  for (int id : {1, 2, 6}) {
    const DesignSpec d = design(id);
    const Simulation s = generate(d, 1000000, 81, 0);
    const double vc = d.v_role == VRole::RepeatedMeasure ? 0.0 : d.v_coef;
    double sum = 0, n = 0;
    for (const auto& l : s.latent) {
      const bool t0 = d.intercept + vc * l.v - l.u1 > 0;
      const bool t1 = d.intercept + d.z_coef + vc * l.v - l.u1 > 0;
      if (t1 && !t0) {
        sum += l.y1 - l.y0;
        n += 1;
      }
    }
    EXPECT_NEAR(sum / n, complier_late(d), 0.01) << "design " << id;
  }
  EXPECT_NEAR(complier_late(design(1)), 1.0, 1e-12);
}

TEST(Summarize, Identities) {
  const McRow one = summarize({1.3}, {true}, 1.0);
  EXPECT_EQ(one.sd, 0.0);
  EXPECT_NEAR(one.rmse, 0.3, 1e-15);
  EXPECT_EQ(one.cp, 1.0);
  const McRow r = summarize({0.9, 1.4, 1.1, 0.7, 1.25}, {true, false, true, true, false}, 1.0);
  EXPECT_NEAR(r.rmse * r.rmse, r.bias * r.bias + r.sd * r.sd, 1e-10);
  EXPECT_NEAR(r.bias, 0.07, 1e-12);
  EXPECT_NEAR(r.cp, 0.6, 1e-15);
  EXPECT_EQ(r.used, 5u);
}

TEST(RunStudy, ThreadCountDoesNotMatter) {
  StudyConfig cfg;
  cfg.design = 4;
  cfg.n = 400;
  cfg.reps = 12;
  cfg.seed = 3;
  const McSummary a = run_study(cfg);
  cfg.threads = 3;
  const McSummary b = run_study(cfg);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].bias, b.rows[i].bias);
    EXPECT_EQ(a.rows[i].sd, b.rows[i].sd);
    EXPECT_EQ(a.rows[i].cp, b.rows[i].cp);
    EXPECT_EQ(a.rows[i].used + a.rows[i].failed, cfg.reps);
  }
  EXPECT_NO_THROW(a.row("beta_star", "gmm"));
  EXPECT_NO_THROW(a.row("beta_star", "naive_iv"));
  EXPECT_NO_THROW(a.row("delta_p_star", "naive_ols"));
  EXPECT_THROW(a.row("beta_star", "bootstrap"), Error);
}

TEST(RunStudy, SingleReplication) {
  StudyConfig cfg;
  cfg.n = 500;
  cfg.reps = 1;
  for (const McRow& r : run_study(cfg).rows) {
    if (r.used != 1) continue;
    EXPECT_EQ(r.sd, 0.0);
    EXPECT_NEAR(r.rmse, std::abs(r.bias), 1e-15);
  }
}

TEST(SimulateModel, ReproducesCellProbabilities) {
  ParamVector th(Mode::CaseI, 3);
  th.r = 0.4;
  th.m0 = {0.1, 0.2};
  th.m1 = {0.15, 0.05};
  th.p_star = {std::vector<double>{0.2, 0.5, 0.8}, std::vector<double>{0.3, 0.6, 0.7}};
  th.tau_star = {1, 2};
  const VProbabilities vp = {std::vector<double>{0.2, 0.3, 0.5}, std::vector<double>{0.4, 0.4, 0.2}};
  th.delta_p_star = implied_delta_p_star(th, vp);
  th.beta_star = 0.8;
  const Dataset ds = simulate_model(th, vp, 400000, 4);
  const CellStats st = cell_stats(ds);
  const CellStats pop = population_cell_stats(th, vp);
  EXPECT_NEAR(st.r_hat, 0.4, 0.005);
  for (int z = 0; z < 2; ++z)
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(st.cell(z, k).p, pop.cell(z, k).p, 0.01);
      EXPECT_NEAR(st.cell(z, k).tau, pop.cell(z, k).tau, 0.05);
    }
  EXPECT_NEAR((st.mu_z[1] - st.mu_z[0]) / th.delta_p_star, th.beta_star, 0.05);
}
