#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlate/data_model.hpp"
#include "mlate/forward_model.hpp"
#include "mlate/optimizer.hpp"

namespace mlate {

enum class Weighting { Identity, TwoStepOptimal };

std::string to_string(Weighting w);
Weighting parse_weighting(const std::string& text);

struct GmmConfig {
  Weighting weighting = Weighting::Identity;
  int max_iter = 500;
  double tol_grad = 1e-10;
  double tol_step = 1e-12;
  std::optional<ParamVector> start;  // empty: closed-form start
  double ci_level = 0.95;
  double fd_step = 1e-6;
  double margin = 1e-4;  // keeps probabilities and s away from the boundary
  IdentifyOptions identify;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct Estimate {
  ParamVector theta_hat;
  Eigen::MatrixXd vcov;
  Eigen::VectorXd se;
  std::vector<Interval> ci;
  Eigen::VectorXd gbar;
  double j_stat = 0.0;
  std::size_t j_dof = 0;
  std::optional<double> j_pvalue;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  double n = 0.0;
  Weighting weighting = Weighting::Identity;
  std::string start;            // which starting value produced theta_hat
  std::string start_diagnostic; // why the closed-form start was not used, if it was not
};

// Nonlinear GMM on the 4K+3 moment conditions. Starts from the closed-form
// solution when it exists and otherwise from the better of a clamped
// closed-form start and a naive start. Non-convergence is reported through
// Estimate::converged rather than thrown.
Estimate estimate(const Dataset& ds, const GmmConfig& cfg = {});

// (G'WG)^{-1} G'W Omega W G (G'WG)^{-1} / n.
Eigen::MatrixXd sandwich_cov(const Eigen::MatrixXd& G, const Eigen::MatrixXd& W, const Eigen::MatrixXd& Omega,
                             double n);

struct JTest {
  double stat = 0.0;
  std::size_t dof = 0;
  std::optional<double> pvalue;
};

// Overidentification test. Requires two-step optimal weighting whenever
// dof > 0; with dof = 0 the statistic is returned without a p-value, or
// NotOveridentified is thrown if require_pvalue is set.
JTest j_test(const Estimate& est, bool require_pvalue = false);

double normal_critical_value(double level);

std::vector<Interval> confidence_intervals(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& se, double level);

// Feasible set used by estimate(); the sign of dp* follows the start.
BoxConstraints gmm_constraints(const ParamLayout& layout, double margin, double dp_sign);

}  // namespace mlate
