#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace mlate::testing {

Dataset weighted_rows(const CellStats& stats, Mode mode) {
  Dataset ds;
  ds.mode = mode;
  for (std::size_t k = 0; k < stats.K; ++k) ds.v_support.push_back(std::to_string(k));
  for (int z = 0; z < 2; ++z) {
    for (std::size_t k = 0; k < stats.K; ++k) {
      const Cell& c = stats.cell(z, k);
      for (int t = 0; t < 2; ++t) {
        if (c.n_t[t] <= 0.0) continue;
        ds.rows.push_back({c.y_mean[t], t, z, static_cast<int>(k)});
        ds.weights.push_back(c.n_t[t]);
      }
    }
  }
  return ds;
}

Dataset make_dataset(const std::vector<Row>& rows, std::size_t K, Mode mode) {
  Dataset ds;
  ds.mode = mode;
  for (std::size_t k = 0; k < K; ++k) ds.v_support.push_back(std::to_string(k));
  for (const Row& r : rows) ds.rows.push_back({r.y, r.t, r.z, r.v});
  return ds;
}

Draw random_draw(Mode mode, std::size_t K, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    Draw d;
    d.theta = ParamVector(mode, K);
    ParamVector& th = d.theta;
    th.r = 0.2 + 0.6 * u(rng);
    th.beta_star = -3.0 + 6.0 * u(rng);
    double m0 = 0.45 * u(rng);
    double m1 = 0.45 * u(rng);
    bool ok = true;
    for (int z = 0; z < 2; ++z) {
      if (mode == Mode::CaseI && z == 1) {
        m0 = 0.45 * u(rng);
        m1 = 0.45 * u(rng);
      }
      th.m0[z] = m0;
      th.m1[z] = m1;
      if (m0 + m1 > 0.9) ok = false;
      const double mag = 0.1 + 2.0 * u(rng);
      th.tau_star[z] = u(rng) < 0.5 ? -mag : mag;
      std::vector<double> ps(K);
      for (double& p : ps) p = u(rng);
      std::vector<double> sorted = ps;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t k = 1; k < K; ++k) {
        if (sorted[k] - sorted[k - 1] < 0.05) ok = false;
      }
      for (double p : ps) {
        const double obs = implied_p(m0, m1, p);
        if (obs < 0.02 || obs > 0.98) ok = false;
      }
      th.p_star[z] = ps;
      std::vector<double> vp(K);
      double total = 0.0;
      for (double& q : vp) total += (q = 0.2 + u(rng));
      for (double& q : vp) q /= total;
      d.v_probs[z] = vp;
    }
    if (!ok) continue;
    th.delta_p_star = implied_delta_p_star(th, d.v_probs);
    if (std::abs(th.delta_p_star) < 0.05) continue;
    return d;
  }
}

Draw reference_draw() {
  Draw d;
  d.theta = ParamVector(Mode::CaseII, 2);
  ParamVector& th = d.theta;
  th.r = 0.5;
  th.m0 = {0.25, 0.25};
  th.m1 = {0.25, 0.25};
  th.p_star = {std::vector<double>{0.1, 0.35}, std::vector<double>{0.5, 0.75}};
  th.tau_star = {1.0, 1.0};
  th.beta_star = 1.0;
  d.v_probs = {std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}};
  th.delta_p_star = implied_delta_p_star(th, d.v_probs);
  return d;
}

}  // namespace mlate::testing
