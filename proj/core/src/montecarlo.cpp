#include "mlate/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "mlate/baselines.hpp"
#include "mlate/errors.hpp"
#include "mlate/gmm.hpp"

namespace mlate {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const boost::math::normal& std_normal() {
  static const boost::math::normal dist;
  return dist;
}

double Phi(double x) {
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  return boost::math::cdf(std_normal(), x);
}

double phi(double x) { return std::isfinite(x) ? boost::math::pdf(std_normal(), x) : 0.0; }

double x_phi(double x) { return std::isfinite(x) ? x * phi(x) : 0.0; }

// Moments of a standard normal restricted to [a, b).
struct Truncated {
  double prob;
  double mean;
  double second;
};

Truncated truncated(double a, double b) {
  const double p = Phi(b) - Phi(a);
  return {p, (phi(a) - phi(b)) / p, 1.0 + (x_phi(a) - x_phi(b)) / p};
}

double conditional_slope() { return kU12Covariance; }
double residual_variance() { return kU2Variance - kU12Covariance * kU12Covariance; }

// E(Y | T* = 1) - E(Y | T* = 0) within a cell whose threshold is c (T* = 1 iff U1 < c).
double within_cell_contrast(const DesignSpec& d, double c) {
  const Truncated lo = truncated(-kInf, c);
  const Truncated hi = truncated(c, kInf);
  const double b = conditional_slope();
  if (d.outcome == OutcomeRule::Homogeneous) return 1.0 + b * (lo.mean - hi.mean);
  const double treated = 2.0 * (residual_variance() + b * b * lo.second);
  return treated - b * hi.mean;
}

// E(2 U2^2 - U2 | U1 in [a, b)) or 1 for the homogeneous rule.
double effect_on_interval(const DesignSpec& d, double a, double b) {
  if (d.outcome == OutcomeRule::Homogeneous) return 1.0;
  const Truncated tr = truncated(a, b);
  const double s = conditional_slope();
  return 2.0 * (residual_variance() + s * s * tr.second) - s * tr.mean;
}

double threshold(const DesignSpec& d, int z, int v) {
  return d.intercept + d.z_coef * z + (d.v_role == VRole::RepeatedMeasure ? 0.0 : d.v_coef * v);
}

// Uniform on the open interval (0, 1).
double uniform(std::mt19937_64& eng) { return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53; }

std::mt19937_64 engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double normal_quantile(double u) { return boost::math::quantile(std_normal(), u); }

struct RepOutcome {
  bool gmm_ok = false;
  std::array<double, 4> gmm{};
  std::array<bool, 4> gmm_cover{};
  bool iv_ok = false;
  double iv = 0.0;
  bool iv_cover = false;
  bool ols_ok = false;
  double ols = 0.0;
  bool ols_cover = false;
};

bool covers(double est, double se, double crit, double truth) { return std::abs(est - truth) <= crit * se; }

RepOutcome replicate(const DesignSpec& d, const ParamVector& truth, const StudyConfig& cfg, std::size_t rep,
                     double crit) {
  RepOutcome out;
  const Simulation sim = generate(d, cfg.n, cfg.seed, rep);
  const Dataset& ds = sim.data;
  try {
    GmmConfig gc;
    gc.ci_level = cfg.level;
    const Estimate est = estimate(ds, gc);
    if (est.converged) {
      const ParamLayout lay = truth.layout();
      const std::array<std::size_t, 4> idx{ParamLayout::beta(), ParamLayout::delta_p(), lay.m0(0), lay.m1(0)};
      const Eigen::VectorXd th = truth.to_vector();
      const Eigen::VectorXd x = est.theta_hat.to_vector();
      bool finite = true;
      for (std::size_t j = 0; j < 4; ++j) {
        const Eigen::Index i = static_cast<Eigen::Index>(idx[j]);
        out.gmm[j] = x[i];
        out.gmm_cover[j] = covers(x[i], est.se[i], crit, th[i]);
        finite = finite && std::isfinite(x[i]) && std::isfinite(est.se[i]);
      }
      out.gmm_ok = finite;
    }
  } catch (const Error&) {
    out.gmm_ok = false;
  }
  try {
    const RegressionResult iv = wald_iv(ds);
    out.iv = iv.slope();
    out.iv_cover = covers(iv.slope(), iv.slope_se(), crit, truth.beta_star);
    out.iv_ok = std::isfinite(out.iv);
  } catch (const Error&) {
    out.iv_ok = false;
  }
  try {
    const RegressionResult fs = ols(ds, Variable::Treatment, {Variable::Instrument});
    out.ols = fs.slope();
    out.ols_cover = covers(fs.slope(), fs.slope_se(), crit, truth.delta_p_star);
    out.ols_ok = std::isfinite(out.ols);
  } catch (const Error&) {
    out.ols_ok = false;
  }
  return out;
}

}  // namespace

std::string to_string(VRole role) {
  switch (role) {
    case VRole::Covariate: return "covariate";
    case VRole::Instrument: return "instrument";
    case VRole::RepeatedMeasure: return "repeated_measure";
  }
  return "unknown";
}

std::string to_string(OutcomeRule rule) {
  return rule == OutcomeRule::Homogeneous ? "homogeneous" : "heterogeneous_u2";
}

DesignSpec design(int id) {
  if (id < 1 || id > 6) throw Error(ErrorKind::InvalidArgument, "design must be in 1..6");
  DesignSpec d;
  d.id = id;
  d.outcome = id % 2 == 1 ? OutcomeRule::Homogeneous : OutcomeRule::HeterogeneousU2;
  if (id <= 2) {
    d.v_role = VRole::Covariate;
    d.v_effect = 0.3;
  } else if (id <= 4) {
    d.v_role = VRole::Instrument;
  } else {
    d.v_role = VRole::RepeatedMeasure;
    d.intercept = -0.5;
    d.v_coef = 0.0;
    d.v_flip = 0.3;
  }
  return d;
}

Simulation generate(const DesignSpec& d, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
  std::mt19937_64 eng = engine(seed, stream);
  const double sd_e = std::sqrt(residual_variance());
  Simulation sim;
  sim.data.mode = Mode::CaseII;
  sim.data.v_support = {"0", "1"};
  sim.data.rows.resize(n);
  sim.latent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double uz = uniform(eng);
    const double uv = uniform(eng);
    const double e1 = normal_quantile(uniform(eng));
    const double e2 = normal_quantile(uniform(eng));
    const double ut = uniform(eng);
    const double uvf = uniform(eng);

    LatentDraw& l = sim.latent[i];
    l.z = uz < 0.5 ? 1 : 0;
    l.u1 = e1;
    l.u2 = conditional_slope() * e1 + sd_e * e2;
    if (d.v_role == VRole::RepeatedMeasure) {
      l.t_star = d.intercept + d.z_coef * l.z - l.u1 > 0.0 ? 1 : 0;
      l.v = uvf < d.v_flip ? 1 - l.t_star : l.t_star;
    } else {
      l.v = uv < 0.5 ? 1 : 0;
      l.t_star = d.intercept + d.z_coef * l.z + d.v_coef * l.v - l.u1 > 0.0 ? 1 : 0;
    }
    l.t = ut < d.m_t ? 1 - l.t_star : l.t_star;
    l.u_t = l.t - l.t_star;
    if (d.outcome == OutcomeRule::Homogeneous) {
      l.y0 = 1.0 + d.v_effect * l.v + l.u2;
      l.y1 = l.y0 + 1.0;
    } else {
      l.y0 = d.v_effect * l.v + l.u2;
      l.y1 = l.y0 + l.u2 * (2.0 * l.u2 - 1.0);
    }
    sim.data.rows[i] = {l.t_star == 1 ? l.y1 : l.y0, l.t, l.z, l.v};
  }
  return sim;
}

VProbabilities v_probabilities(const DesignSpec& d) {
  VProbabilities out;
  for (int z = 0; z < 2; ++z) {
    if (d.v_role == VRole::RepeatedMeasure) {
      const double q = Phi(threshold(d, z, 0));
      const double p1 = (1.0 - d.v_flip) * q + d.v_flip * (1.0 - q);
      out[z] = {1.0 - p1, p1};
    } else {
      out[z] = {0.5, 0.5};
    }
  }
  return out;
}

ParamVector true_params(const DesignSpec& d) {
  ParamVector th(Mode::CaseII, 2);
  th.beta_star = 1.0;
  th.r = 0.5;
  th.m0 = {d.m_t, d.m_t};
  th.m1 = {d.m_t, d.m_t};
  const VProbabilities vp = v_probabilities(d);
  for (int z = 0; z < 2; ++z) {
    double tau = 0.0;
    for (int v = 0; v < 2; ++v) {
      const double c = threshold(d, z, v);
      const double q = Phi(c);
      if (d.v_role == VRole::RepeatedMeasure) {
        const double agree = 1.0 - d.v_flip;
        const double num = v == 1 ? agree * q : d.v_flip * q;
        const double den = v == 1 ? agree * q + d.v_flip * (1.0 - q) : d.v_flip * q + agree * (1.0 - q);
        th.p_star[z][static_cast<std::size_t>(v)] = num / den;
      } else {
        th.p_star[z][static_cast<std::size_t>(v)] = q;
      }
      tau += vp[z][static_cast<std::size_t>(v)] * within_cell_contrast(d, c);
    }
    th.tau_star[z] = tau;
  }
  th.delta_p_star = implied_delta_p_star(th, vp);
  return th;
}

double complier_late(const DesignSpec& d) {
  double num = 0.0;
  double den = 0.0;
  const int v_levels = d.v_role == VRole::RepeatedMeasure ? 1 : 2;
  for (int v = 0; v < v_levels; ++v) {
    const double a = threshold(d, 0, v);
    const double b = threshold(d, 1, v);
    const double w = Phi(b) - Phi(a);
    num += w * effect_on_interval(d, a, b);
    den += w;
  }
  return num / den;
}

Dataset simulate_model(const ParamVector& theta, const VProbabilities& v_probs, std::size_t n, std::uint64_t seed,
                       std::uint64_t stream, double mu0, double differential) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
  const std::vector<std::string> bad = theta.violations();
  if (!bad.empty()) throw Error(ErrorKind::InvalidArgument, "invalid parameters: " + bad.front());
  const std::size_t K = theta.K;
  for (int z = 0; z < 2; ++z) {
    if (v_probs[z].size() != K) throw Error(ErrorKind::InvalidArgument, "V distribution does not have K entries");
  }
  // Arm intercepts chosen so that mu_1 - mu_0 = beta* dp*.
  const double dp = implied_delta_p_star(theta, v_probs);
  std::array<double, 2> a{};
  for (int z = 0; z < 2; ++z) {
    double p_bar = 0.0;
    for (std::size_t k = 0; k < K; ++k) p_bar += v_probs[z][k] * theta.p_star[z][k];
    a[z] = (z == 0 ? mu0 : mu0 + theta.beta_star * dp) - theta.tau_star[z] * p_bar;
  }

  std::mt19937_64 eng = engine(seed, stream);
  Dataset ds;
  ds.mode = theta.mode;
  for (std::size_t k = 0; k < K; ++k) ds.v_support.push_back(std::to_string(k));
  ds.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double uz = uniform(eng);
    const double uv = uniform(eng);
    const double us = uniform(eng);
    const double ut = uniform(eng);
    const double e = normal_quantile(uniform(eng));
    Observation& o = ds.rows[i];
    o.z = uz < theta.r ? 1 : 0;
    double acc = 0.0;
    o.v = static_cast<int>(K - 1);
    for (std::size_t k = 0; k < K; ++k) {
      acc += v_probs[o.z][k];
      if (uv < acc) {
        o.v = static_cast<int>(k);
        break;
      }
    }
    const int t_star = us < theta.p_star[o.z][static_cast<std::size_t>(o.v)] ? 1 : 0;
    const double flip = t_star == 1 ? theta.m1[o.z] : theta.m0[o.z];
    o.t = ut < flip ? 1 - t_star : t_star;
    o.y = a[o.z] + theta.tau_star[o.z] * t_star + differential * o.t * o.v + e;
  }
  return ds;
}

const McRow& McSummary::row(const std::string& parameter, const std::string& estimator) const {
  for (const McRow& r : rows) {
    if (r.parameter == parameter && r.estimator == estimator) return r;
  }
  throw Error(ErrorKind::InvalidArgument, "no summary row for " + parameter + "/" + estimator);
}

McRow summarize(const std::vector<double>& draws, const std::vector<bool>& covered, double truth) {
  if (draws.size() != covered.size()) throw Error(ErrorKind::InvalidArgument, "draws and coverage differ in length");
  McRow row;
  row.truth = truth;
  row.used = draws.size();
  if (draws.empty()) {
    row.bias = row.sd = row.rmse = row.cp = kNaN;
    return row;
  }
  const double R = static_cast<double>(draws.size());
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= R;
  double ss = 0.0;
  double hits = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    ss += (draws[i] - mean) * (draws[i] - mean);
    hits += covered[i] ? 1.0 : 0.0;
  }
  row.bias = mean - truth;
  row.sd = std::sqrt(ss / R);
  row.rmse = std::sqrt(row.bias * row.bias + row.sd * row.sd);
  row.cp = hits / R;
  return row;
}

McSummary run_study(const StudyConfig& cfg) {
  if (cfg.reps == 0) throw Error(ErrorKind::InvalidArgument, "reps must be at least 1");
  if (cfg.n == 0) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
  const DesignSpec d = design(cfg.design);
  const ParamVector truth = true_params(d);
  const double crit = normal_critical_value(cfg.level);

  std::vector<RepOutcome> results(cfg.reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t rep = next++; rep < cfg.reps; rep = next++) results[rep] = replicate(d, truth, cfg, rep, crit);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.reps)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  McSummary out;
  out.complier_late = complier_late(d);
  const std::array<const char*, 4> names{"beta_star", "delta_p_star", "m0", "m1"};
  const Eigen::VectorXd th = truth.to_vector();
  const ParamLayout lay = truth.layout();
  const std::array<std::size_t, 4> idx{ParamLayout::beta(), ParamLayout::delta_p(), lay.m0(0), lay.m1(0)};
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> draws;
    std::vector<bool> cover;
    for (const RepOutcome& r : results) {
      if (!r.gmm_ok) continue;
      draws.push_back(r.gmm[j]);
      cover.push_back(r.gmm_cover[j]);
    }
    McRow row = summarize(draws, cover, th[static_cast<Eigen::Index>(idx[j])]);
    row.parameter = names[j];
    row.estimator = "gmm";
    out.rows.push_back(row);
  }
  auto naive = [&](const char* parameter, const char* estimator, double truth_value, auto ok, auto value, auto hit) {
    std::vector<double> draws;
    std::vector<bool> cover;
    for (const RepOutcome& r : results) {
      if (!ok(r)) continue;
      draws.push_back(value(r));
      cover.push_back(hit(r));
    }
    McRow row = summarize(draws, cover, truth_value);
    row.parameter = parameter;
    row.estimator = estimator;
    out.rows.push_back(row);
  };
  naive("beta_star", "naive_iv", truth.beta_star, [](const RepOutcome& r) { return r.iv_ok; },
        [](const RepOutcome& r) { return r.iv; }, [](const RepOutcome& r) { return r.iv_cover; });
  naive("delta_p_star", "naive_ols", truth.delta_p_star, [](const RepOutcome& r) { return r.ols_ok; },
        [](const RepOutcome& r) { return r.ols; }, [](const RepOutcome& r) { return r.ols_cover; });
  for (McRow& r : out.rows) {
    r.design = cfg.design;
    r.n = cfg.n;
    r.failed = cfg.reps - r.used;
  }
  return out;
}

}  // namespace mlate
