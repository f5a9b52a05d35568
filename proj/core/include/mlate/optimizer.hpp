#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mlate {

// Feasible set: lower <= x <= upper, plus x_i + x_j <= pair_limit for every
// listed (i, j).
struct BoxConstraints {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<std::pair<std::size_t, std::size_t>> sum_pairs;
  double pair_limit = std::numeric_limits<double>::infinity();

  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
};

struct LmOptions {
  int max_iter = 500;
  double tol_grad = 1e-10;
  double tol_step = 1e-12;
  // Uses the full Hessian of r'r (finite differences of the objective) in
  // place of J'J, for fast convergence when the minimum residual is not zero.
  bool second_order = true;
};

struct LmResult {
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  std::string reason;
};

// Residual map r(x); the minimized objective is r(x)'r(x). A residual
// function may throw mlate::Error to signal that x is outside its domain;
// such trial points are rejected.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Projected Levenberg-Marquardt. Accepted steps strictly decrease the
// objective; iteration stops when the projected gradient falls below
// tol_grad, an accepted step is shorter than tol_step (relative), or
// max_iter is reached (converged = false).
LmResult minimize_projected_lm(const ResidualFn& residual, const JacobianFn& jacobian, const Eigen::VectorXd& x0,
                               const BoxConstraints& box, const LmOptions& options = {});

}  // namespace mlate
