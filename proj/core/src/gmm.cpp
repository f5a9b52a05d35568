#include "mlate/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "mlate/errors.hpp"
#include "mlate/moments.hpp"

namespace mlate {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Start {
  ParamVector theta;
  std::string label;
};

void require_valid(const Dataset& ds) {
  const std::vector<std::string> bad = validate(ds);
  if (bad.empty()) return;
  std::string msg = bad.front();
  if (bad.size() > 1) msg += " (and " + std::to_string(bad.size() - 1) + " more)";
  throw Error(ErrorKind::InvalidArgument, msg);
}

double cell_weight(const CellStats& st, int z, std::size_t k) { return st.cell(z, k).n / st.n_z[z]; }

double clamp_to(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Fills p*, tau*, dp*, beta* for given misclassification rates, clamping
// every probability into the feasible box.
ParamVector plug_in(const CellStats& st, Mode mode, const std::array<MisclassRates, 2>& rates, double eps) {
  ParamVector th(mode, st.K);
  th.r = clamp_to(st.r_hat, eps, 1.0 - eps);
  std::array<double, 2> p_bar{0.0, 0.0};
  for (int z = 0; z < 2; ++z) {
    const double m0 = rates[z].m0;
    const double m1 = rates[z].m1;
    const double s = 1.0 - m0 - m1;
    th.m0[z] = m0;
    th.m1[z] = m1;
    double tau_sum = 0.0;
    double tau_w = 0.0;
    for (std::size_t k = 0; k < st.K; ++k) {
      const Cell& c = st.cell(z, k);
      th.p_star[z][k] = clamp_to((c.p - m0) / s, eps, 1.0 - eps);
      p_bar[z] += cell_weight(st, z, k) * th.p_star[z][k];
      if (!std::isfinite(c.tau)) continue;
      const double p = m0 + s * th.p_star[z][k];
      const double m = (1.0 - m0 * (1.0 - m1) / p - (1.0 - m0) * m1 / (1.0 - p)) / s;
      const double tau = std::abs(m) > 0.05 ? c.tau / m : c.tau;
      tau_sum += c.n * tau;
      tau_w += c.n;
    }
    th.tau_star[z] = tau_w > 0.0 ? tau_sum / tau_w : 0.0;
  }
  double dp = p_bar[1] - p_bar[0];
  if (std::abs(dp) < 10.0 * eps) dp = dp < 0.0 ? -10.0 * eps : 10.0 * eps;
  th.delta_p_star = dp;
  th.beta_star = (st.mu_z[1] - st.mu_z[0]) / dp;
  return th;
}

// Closed-form rates where the B system solves, with the discriminant floored
// at zero and the rates pulled inside the feasible region.
std::optional<std::array<MisclassRates, 2>> clamped_rates(const CellStats& st, Mode mode, double eps) {
  const std::vector<SystemCandidate> cands = nonsingularity_diag(st, mode);
  std::array<MisclassRates, 2> out;
  for (int z = 0; z < 2; ++z) {
    const int want = mode == Mode::CaseI ? z : -1;
    const SystemCandidate* best = nullptr;
    for (const SystemCandidate& c : cands) {
      if (c.z != want || !c.b) continue;
      if (best == nullptr || std::abs(c.determinant) > std::abs(best->determinant)) best = &c;
    }
    if (best == nullptr) return std::nullopt;
    const double d = best->b->b0 - best->b->b1 + 1.0;
    const double s = std::sqrt(std::max(d * d - 4.0 * best->b->b0, 0.0));
    double m0 = clamp_to((d - s) / 2.0, eps, 0.45);
    double m1 = clamp_to(1.0 - m0 - s, eps, 0.45);
    out[z] = {m0, m1, 1.0 - m0 - m1};
  }
  return out;
}

std::vector<Start> starting_points(const CellStats& st, Mode mode, const GmmConfig& cfg, std::string& diagnostic) {
  std::vector<Start> starts;
  if (cfg.start) {
    starts.push_back({*cfg.start, "user"});
    return starts;
  }
  try {
    IdentifyResult id = identify(st, mode, cfg.identify);
    starts.push_back({id.theta, "closed_form"});
    return starts;
  } catch (const Error& e) {
    diagnostic = e.what();
  }
  if (auto rates = clamped_rates(st, mode, cfg.margin)) {
    starts.push_back({plug_in(st, mode, *rates, cfg.margin), "clamped_closed_form"});
  }
  const MisclassRates naive{0.05, 0.05, 0.9};
  starts.push_back({plug_in(st, mode, {naive, naive}, cfg.margin), "naive"});
  return starts;
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw Error(ErrorKind::RankDeficient, std::string(what) + " is not positive definite");
  }
  return ldlt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

struct StageResult {
  LmResult lm;
  std::string label;
};

StageResult run_stage(const Dataset& ds, Mode mode, std::size_t K, const std::vector<Start>& starts,
                      const Eigen::MatrixXd& W, const GmmConfig& cfg) {
  // Q = g'Wg = |L'g|^2 with W = LL'.
  Eigen::LLT<Eigen::MatrixXd> llt(W);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::RankDeficient, "weighting matrix is not positive definite");
  const Eigen::MatrixXd Lt = llt.matrixL().transpose();

  const MomentSums sums = moment_sums(ds);
  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Lt * sample_moments(sums, ParamVector::from_vector(mode, K, x));
  };
  auto jacobian = [&](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    return Lt * moment_jacobian(sums, ParamVector::from_vector(mode, K, x), cfg.fd_step);
  };
  const LmOptions opt{cfg.max_iter, cfg.tol_grad, cfg.tol_step};

  StageResult best;
  best.lm.objective = kInf;
  std::string last_error;
  for (const Start& s : starts) {
    const Eigen::VectorXd x0 = s.theta.to_vector();
    const double sign = s.theta.delta_p_star < 0.0 ? -1.0 : 1.0;
    const BoxConstraints box = gmm_constraints({mode, K}, cfg.margin, sign);
    try {
      LmResult lm = minimize_projected_lm(residual, jacobian, x0, box, opt);
      if (lm.objective < best.lm.objective) best = {lm, s.label};
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (!std::isfinite(best.lm.objective)) {
    throw Error(ErrorKind::StartFailure, "no starting value yields a finite objective" +
                                             (last_error.empty() ? std::string() : " (" + last_error + ")"));
  }
  return best;
}

}  // namespace

std::string to_string(Weighting w) { return w == Weighting::Identity ? "identity" : "optimal"; }

Weighting parse_weighting(const std::string& text) {
  if (text == "identity") return Weighting::Identity;
  if (text == "optimal" || text == "two-step") return Weighting::TwoStepOptimal;
  throw Error(ErrorKind::InvalidArgument, "unknown weighting '" + text + "'");
}

BoxConstraints gmm_constraints(const ParamLayout& lay, double eps, double dp_sign) {
  const Eigen::Index d = static_cast<Eigen::Index>(lay.size());
  BoxConstraints box;
  box.lower = Eigen::VectorXd::Constant(d, -kInf);
  box.upper = Eigen::VectorXd::Constant(d, kInf);
  auto prob = [&](std::size_t i) {
    box.lower[static_cast<Eigen::Index>(i)] = eps;
    box.upper[static_cast<Eigen::Index>(i)] = 1.0 - eps;
  };
  prob(lay.r());
  if (dp_sign >= 0.0) {
    box.lower[lay.delta_p()] = eps;
  } else {
    box.upper[lay.delta_p()] = -eps;
  }
  for (int z = 0; z < 2; ++z) {
    prob(lay.m0(z));
    prob(lay.m1(z));
    for (std::size_t k = 0; k < lay.K; ++k) prob(lay.p_star(z, k));
    if (lay.mode == Mode::CaseI || z == 0) box.sum_pairs.emplace_back(lay.m0(z), lay.m1(z));
  }
  box.pair_limit = 1.0 - eps;
  return box;
}

Eigen::MatrixXd sandwich_cov(const Eigen::MatrixXd& G, const Eigen::MatrixXd& W, const Eigen::MatrixXd& Omega,
                             double n) {
  if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "sample size must be positive");
  if (G.rows() != W.rows() || W.rows() != W.cols() || Omega.rows() != W.rows() || Omega.cols() != W.cols()) {
    throw Error(ErrorKind::InvalidArgument, "sandwich dimensions do not conform");
  }
  // Rank is judged on G itself; G'WG squares its condition number.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  const Eigen::VectorXd sv = svd.singularValues();
  if (G.cols() > G.rows() || sv.size() == 0 || !(sv.minCoeff() > 1e-10 * sv.maxCoeff())) {
    throw Error(ErrorKind::RankDeficient, "moment Jacobian does not have full column rank");
  }
  const Eigen::MatrixXd GtW = G.transpose() * W;
  const Eigen::MatrixXd bread_inv = (GtW * G).fullPivLu().inverse();
  Eigen::MatrixXd v = bread_inv * (GtW * Omega * GtW.transpose()) * bread_inv / n;
  return 0.5 * (v + v.transpose());
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "confidence level must lie in (0,1)");
  return boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + level));
}

std::vector<Interval> confidence_intervals(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& se, double level) {
  if (theta_hat.size() != se.size()) throw Error(ErrorKind::InvalidArgument, "estimate and SE lengths differ");
  const double crit = normal_critical_value(level);
  std::vector<Interval> out(static_cast<std::size_t>(theta_hat.size()));
  for (Eigen::Index j = 0; j < theta_hat.size(); ++j) {
    out[static_cast<std::size_t>(j)] = {theta_hat[j] - crit * se[j], theta_hat[j] + crit * se[j]};
  }
  return out;
}

JTest j_test(const Estimate& est, bool require_pvalue) {
  JTest out{est.j_stat, est.j_dof, std::nullopt};
  if (est.j_dof == 0) {
    if (require_pvalue) throw Error(ErrorKind::NotOveridentified, "model is just-identified; J has no p-value");
    return out;
  }
  if (est.weighting != Weighting::TwoStepOptimal) {
    throw Error(ErrorKind::InvalidArgument, "the J-test requires two-step optimal weighting");
  }
  boost::math::chi_squared chi(static_cast<double>(est.j_dof));
  out.pvalue = boost::math::cdf(boost::math::complement(chi, std::max(est.j_stat, 0.0)));
  return out;
}

Estimate estimate(const Dataset& ds, const GmmConfig& cfg) {
  if (!(cfg.tol_grad > 0.0 && cfg.tol_step > 0.0 && cfg.fd_step > 0.0 && cfg.margin > 0.0 && cfg.max_iter > 0)) {
    throw Error(ErrorKind::InvalidArgument, "GMM tolerances must be positive");
  }
  if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) throw Error(ErrorKind::InvalidArgument, "ci_level must lie in (0,1)");
  require_valid(ds);
  const Mode mode = ds.mode;
  const std::size_t K = ds.support_size();
  const MomentLayout mlay{mode, K};
  const long overid = mlay.overidentification();
  if (overid < 0) throw Error(ErrorKind::InvalidArgument, "more parameters than moment conditions");

  const CellStats st = cell_stats(ds);
  Estimate est;
  est.n = ds.total_weight();
  est.weighting = cfg.weighting;
  est.j_dof = static_cast<std::size_t>(overid);

  std::vector<Start> starts = starting_points(st, mode, cfg, est.start_diagnostic);
  if (cfg.start) {
    const std::vector<std::string> bad = cfg.start->violations();
    if (cfg.start->mode != mode || cfg.start->K != K) throw Error(ErrorKind::StartFailure, "user start has the wrong layout");
    if (!bad.empty()) throw Error(ErrorKind::StartFailure, "user start violates constraints: " + bad.front());
  }

  const Eigen::Index m = static_cast<Eigen::Index>(mlay.size());
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(m, m);
  StageResult stage = run_stage(ds, mode, K, starts, W, cfg);
  est.start = stage.label;

  if (cfg.weighting == Weighting::TwoStepOptimal) {
    const ParamVector first = ParamVector::from_vector(mode, K, stage.lm.x);
    W = inverse_spd(moment_outer(ds, first), "moment covariance at the first-step estimate");
    StageResult second = run_stage(ds, mode, K, {Start{first, stage.label}}, W, cfg);
    second.lm.iterations += stage.lm.iterations;
    stage = second;
  }

  est.theta_hat = ParamVector::from_vector(mode, K, stage.lm.x);
  est.objective = stage.lm.objective;
  est.converged = stage.lm.converged;
  est.iterations = stage.lm.iterations;

  const MomentEval ev = evaluate_moments(ds, est.theta_hat, cfg.fd_step);
  est.gbar = ev.gbar;
  est.vcov = sandwich_cov(ev.jacobian, W, ev.omega, est.n);
  est.se = est.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  est.ci = confidence_intervals(stage.lm.x, est.se, cfg.ci_level);

  if (cfg.weighting == Weighting::TwoStepOptimal) {
    est.j_stat = est.n * ev.gbar.dot(W * ev.gbar);
  } else if (est.j_dof == 0) {
    try {
      est.j_stat = est.n * ev.gbar.dot(inverse_spd(ev.omega, "moment covariance") * ev.gbar);
    } catch (const Error&) {
      est.j_stat = kNaN;
    }
  } else {
    est.j_stat = kNaN;
  }
  if (est.j_dof > 0 && cfg.weighting == Weighting::TwoStepOptimal) est.j_pvalue = j_test(est).pvalue;
  return est;
}

}  // namespace mlate
