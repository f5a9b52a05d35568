#include "mlate/baselines.hpp"

#include <cmath>
#include <limits>

#include "mlate/errors.hpp"
#include "mlate/forward_model.hpp"

namespace mlate {
namespace {

void check_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  if (X.rows() != y.size() || w.size() != y.size()) throw Error(ErrorKind::InvalidArgument, "regression inputs differ in length");
  if (X.rows() == 0) throw Error(ErrorKind::EmptyCell, "regression sample is empty");
  if ((w.array() < 0.0).any()) throw Error(ErrorKind::InvalidArgument, "negative regression weight");
}

Eigen::MatrixXd invert(const Eigen::MatrixXd& A, const char* what) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error(ErrorKind::RankDeficient, std::string(what) + " is singular");
  return lu.inverse();
}

void finish(RegressionResult& res, const Eigen::MatrixXd& bread, const Eigen::MatrixXd& Zm, const Eigen::VectorXd& e,
            const Eigen::VectorXd& w, RobustFlavor flavor) {
  const Eigen::VectorXd we2 = w.array() * e.array().square();
  const Eigen::MatrixXd meat = Zm.transpose() * we2.asDiagonal() * Zm;
  res.vcov = bread * meat * bread.transpose();
  res.n = w.sum();
  const double k = static_cast<double>(Zm.cols());
  if (flavor == RobustFlavor::HC1) {
    if (!(res.n > k)) throw Error(ErrorKind::RankDeficient, "HC1 needs more observations than regressors");
    res.vcov *= res.n / (res.n - k);
  }
  res.vcov = 0.5 * (res.vcov + res.vcov.transpose());
  res.robust_se = res.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

double value_of(const Dataset& ds, const std::vector<double>& v_values, std::size_t i, Variable var) {
  const Observation& o = ds.rows[i];
  switch (var) {
    case Variable::Outcome: return o.y;
    case Variable::Treatment: return o.t;
    case Variable::Instrument: return o.z;
    case Variable::Exogenous: return v_values[static_cast<std::size_t>(o.v)];
  }
  return 0.0;
}

Eigen::VectorXd weight_vector(const Dataset& ds) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) w[static_cast<Eigen::Index>(i)] = ds.weight(i);
  return w;
}

}  // namespace

std::string to_string(Variable v) {
  switch (v) {
    case Variable::Outcome: return "outcome";
    case Variable::Treatment: return "treatment";
    case Variable::Instrument: return "instrument";
    case Variable::Exogenous: return "exogenous";
  }
  return "unknown";
}

RegressionResult least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               RobustFlavor flavor) {
  check_shapes(X, y, w);
  const Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
  const Eigen::MatrixXd bread = invert(XtW * X, "X'WX");
  RegressionResult res;
  res.coef = bread * (XtW * y);
  finish(res, bread, X, y - X * res.coef, w, flavor);
  return res;
}

RegressionResult instrumental_variables(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Zm, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& w, RobustFlavor flavor) {
  check_shapes(X, y, w);
  if (Zm.rows() != X.rows() || Zm.cols() != X.cols()) {
    throw Error(ErrorKind::InvalidArgument, "instrument matrix must match the regressor matrix");
  }
  const Eigen::MatrixXd ZtW = Zm.transpose() * w.asDiagonal();
  const Eigen::MatrixXd bread = invert(ZtW * X, "Z'WX");
  RegressionResult res;
  res.coef = bread * (ZtW * y);
  finish(res, bread, Zm, y - X * res.coef, w, flavor);
  return res;
}

RegressionResult wald_iv(const Dataset& ds, RobustFlavor flavor) {
  const CellStats st = cell_stats(ds);
  if (std::abs(st.p_z[1] - st.p_z[0]) <= kFirstStageTolerance) {
    throw Error(ErrorKind::WeakFirstStage, "observed first stage p1 - p0 is zero");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(ds.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::MatrixXd Zm(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Observation& o = ds.rows[static_cast<std::size_t>(i)];
    X(i, 0) = 1.0;
    X(i, 1) = o.t;
    Zm(i, 0) = 1.0;
    Zm(i, 1) = o.z;
    y[i] = o.y;
  }
  RegressionResult res = instrumental_variables(X, Zm, y, weight_vector(ds), flavor);
  res.names = {"intercept", "treatment"};
  return res;
}

RegressionResult ols(const Dataset& ds, Variable dependent, const std::vector<Variable>& regressors,
                     RobustFlavor flavor) {
  const std::vector<double> v_values = ds.v_values();
  const Eigen::Index n = static_cast<Eigen::Index>(ds.size());
  const Eigen::Index k = static_cast<Eigen::Index>(regressors.size()) + 1;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t row = static_cast<std::size_t>(i);
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) X(i, j) = value_of(ds, v_values, row, regressors[static_cast<std::size_t>(j - 1)]);
    y[i] = value_of(ds, v_values, row, dependent);
  }
  RegressionResult res = least_squares(X, y, weight_vector(ds), flavor);
  res.names.push_back("intercept");
  for (Variable v : regressors) res.names.push_back(to_string(v));
  return res;
}

std::array<RegressionResult, 2> relevance_test(const Dataset& ds, RobustFlavor flavor) {
  std::array<RegressionResult, 2> out;
  for (int z = 0; z < 2; ++z) {
    Dataset sub;
    sub.v_support = ds.v_support;
    sub.mode = ds.mode;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.rows[i].z != z) continue;
      sub.rows.push_back(ds.rows[i]);
      if (!ds.weights.empty()) sub.weights.push_back(ds.weights[i]);
    }
    if (sub.rows.empty()) throw Error(ErrorKind::EmptyCell, "instrument arm z=" + std::to_string(z) + " is empty");
    out[z] = ols(sub, Variable::Treatment, {Variable::Exogenous}, flavor);
  }
  return out;
}

NaiveBiasReport naive_bias_diag(const Estimate& est, const Dataset& ds) {
  const CellStats st = cell_stats(ds);
  NaiveBiasReport rep;
  const double dp = st.p_z[1] - st.p_z[0];
  rep.beta_naive = std::abs(dp) > kFirstStageTolerance ? (st.mu_z[1] - st.mu_z[0]) / dp
                                                       : std::numeric_limits<double>::quiet_NaN();
  rep.s_hat = est.theta_hat.s(0);
  rep.beta_star = est.theta_hat.beta_star;
  rep.implied_naive = rep.beta_star / rep.s_hat;
  rep.gap = rep.beta_naive - rep.implied_naive;
  return rep;
}

}  // namespace mlate
