#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlate/data_model.hpp"
#include "mlate/gmm.hpp"

namespace mlate {

// Columns of a Dataset that can enter a regression. Exogenous uses the
// numeric value of the V label.
enum class Variable { Outcome, Treatment, Instrument, Exogenous };

// HC0 is the plain sandwich; HC1 rescales it by n / (n - k).
enum class RobustFlavor { HC0, HC1 };

std::string to_string(Variable v);

struct RegressionResult {
  Eigen::VectorXd coef;       // intercept first
  Eigen::VectorXd robust_se;
  Eigen::MatrixXd vcov;
  double n = 0.0;
  std::vector<std::string> names;

  double slope() const { return coef[coef.size() - 1]; }
  double slope_se() const { return robust_se[robust_se.size() - 1]; }
};

// Weighted least squares with heteroscedasticity-robust covariance. X must
// already contain the intercept column.
RegressionResult least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               RobustFlavor flavor = RobustFlavor::HC0);

// Just-identified IV: (Z'WX)^{-1} Z'Wy with the matching robust sandwich.
RegressionResult instrumental_variables(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Zm, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& w, RobustFlavor flavor = RobustFlavor::HC0);

// 2SLS of Y on (1, T) instrumented by (1, Z). The slope is the Wald ratio.
RegressionResult wald_iv(const Dataset& ds, RobustFlavor flavor = RobustFlavor::HC0);

RegressionResult ols(const Dataset& ds, Variable dependent, const std::vector<Variable>& regressors,
                     RobustFlavor flavor = RobustFlavor::HC0);

// OLS of T on (1, V) within each instrument arm; element z holds Z = z.
std::array<RegressionResult, 2> relevance_test(const Dataset& ds, RobustFlavor flavor = RobustFlavor::HC0);

struct NaiveBiasReport {
  double beta_naive = 0.0;
  double s_hat = 0.0;
  double beta_star = 0.0;
  double implied_naive = 0.0;  // beta_star / s_hat
  double gap = 0.0;            // beta_naive - implied_naive
};

NaiveBiasReport naive_bias_diag(const Estimate& est, const Dataset& ds);

}  // namespace mlate
