#include "mlate/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "mlate/errors.hpp"

namespace mlate {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kActiveSlack = 1e-14;

double safe_objective(const ResidualFn& residual, const Eigen::VectorXd& x, Eigen::VectorXd& r) {
  try {
    r = residual(x);
  } catch (const Error&) {
    return kInf;
  }
  const double q = r.squaredNorm();
  return std::isfinite(q) ? q : kInf;
}

// Half the Hessian of r'r over the free coordinates, by central differences
// of the objective. Differencing the objective rather than the Jacobian keeps
// the error small relative to the weakly curved directions that matter when
// the minimum residual is not zero. Empty when a perturbed point is infeasible.
std::optional<Eigen::MatrixXd> objective_hessian(const ResidualFn& residual, const Eigen::VectorXd& x, double q,
                                                 const std::vector<Eigen::Index>& free) {
  const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
  Eigen::VectorXd h(nf);
  for (Eigen::Index c = 0; c < nf; ++c) h[c] = 1e-4 * std::max(1.0, std::abs(x[free[static_cast<std::size_t>(c)]]));
  Eigen::VectorXd scratch;
  auto Q = [&](Eigen::Index a, double sa, Eigen::Index b, double sb) {
    Eigen::VectorXd y = x;
    y[free[static_cast<std::size_t>(a)]] += sa * h[a];
    if (b >= 0) y[free[static_cast<std::size_t>(b)]] += sb * h[b];
    return safe_objective(residual, y, scratch);
  };
  Eigen::MatrixXd H(nf, nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    const double qp = Q(a, 1.0, -1, 0.0);
    const double qm = Q(a, -1.0, -1, 0.0);
    H(a, a) = (qp - 2.0 * q + qm) / (h[a] * h[a]);
    for (Eigen::Index b = 0; b < a; ++b) {
      H(a, b) = (Q(a, 1.0, b, 1.0) - Q(a, 1.0, b, -1.0) - Q(a, -1.0, b, 1.0) + Q(a, -1.0, b, -1.0)) / (4.0 * h[a] * h[b]);
      H(b, a) = H(a, b);
    }
  }
  if (!H.allFinite()) return std::nullopt;
  return 0.5 * H;
}

}  // namespace

Eigen::VectorXd BoxConstraints::project(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = x.cwiseMax(lower).cwiseMin(upper);
  for (const auto& [i, j] : sum_pairs) {
    const double excess = out[i] + out[j] - pair_limit;
    if (excess <= 0.0) continue;
    out[i] -= excess / 2.0;
    out[j] -= excess / 2.0;
    if (out[i] < lower[i]) {
      out[i] = lower[i];
      out[j] = pair_limit - lower[i];
    } else if (out[j] < lower[j]) {
      out[j] = lower[j];
      out[i] = pair_limit - lower[j];
    }
  }
  return out;
}

bool BoxConstraints::contains(const Eigen::VectorXd& x, double slack) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
  }
  for (const auto& [i, j] : sum_pairs) {
    if (x[i] + x[j] > pair_limit + slack) return false;
  }
  return true;
}

LmResult minimize_projected_lm(const ResidualFn& residual, const JacobianFn& jacobian, const Eigen::VectorXd& x0,
                               const BoxConstraints& box, const LmOptions& opt) {
  LmResult res;
  Eigen::VectorXd x = box.project(x0);
  Eigen::VectorXd r;
  double q = safe_objective(residual, x, r);
  if (!std::isfinite(q)) throw Error(ErrorKind::StartFailure, "objective is undefined at the starting point");

  const Eigen::Index dim = x.size();
  double lambda = 1e-3;
  res.reason = "max_iter";

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    res.iterations = iter + 1;
    if (q == 0.0) {
      res.converged = true;
      res.reason = "zero_objective";
      break;
    }
    const Eigen::MatrixXd J = jacobian(x);
    const Eigen::VectorXd grad = 2.0 * J.transpose() * r;
    const Eigen::VectorXd pg = x - box.project(x - grad);
    if (pg.lpNorm<Eigen::Infinity>() <= opt.tol_grad) {
      res.converged = true;
      res.reason = "gradient";
      break;
    }

    // Coordinates pinned at a bound with the gradient pushing outward stay fixed.
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const bool at_lower = x[i] <= box.lower[i] + kActiveSlack && grad[i] > 0.0;
      const bool at_upper = x[i] >= box.upper[i] - kActiveSlack && grad[i] < 0.0;
      if (!at_lower && !at_upper) free.push_back(i);
    }
    if (free.empty()) {
      res.converged = true;
      res.reason = "all_bounds_active";
      break;
    }
    const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd Jf(J.rows(), nf);
    for (Eigen::Index c = 0; c < nf; ++c) Jf.col(c) = J.col(free[c]);
    Eigen::MatrixXd A = Jf.transpose() * Jf;
    const Eigen::VectorXd b = -Jf.transpose() * r;
    Eigen::VectorXd diag = A.diagonal();
    const double floor = std::max(1e-12 * diag.maxCoeff(), 1e-300);
    diag = diag.cwiseMax(floor);
    if (opt.second_order) {
      if (auto H = objective_hessian(residual, x, q, free)) A = *H;
    }

    bool accepted = false;
    double step_norm = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      // Solve on the free set, then drop coordinates sitting on a bound that
      // the step would push outward and solve again.
      std::vector<Eigen::Index> sub(static_cast<std::size_t>(nf));
      for (Eigen::Index c = 0; c < nf; ++c) sub[static_cast<std::size_t>(c)] = c;
      Eigen::VectorXd delta_f;
      bool solved = false;
      while (!sub.empty()) {
        const Eigen::Index ns = static_cast<Eigen::Index>(sub.size());
        Eigen::MatrixXd Aug(ns, ns);
        Eigen::VectorXd bs(ns);
        for (Eigen::Index i = 0; i < ns; ++i) {
          bs[i] = b[sub[static_cast<std::size_t>(i)]];
          for (Eigen::Index j = 0; j < ns; ++j) Aug(i, j) = A(sub[static_cast<std::size_t>(i)], sub[static_cast<std::size_t>(j)]);
          Aug(i, i) += lambda * diag[sub[static_cast<std::size_t>(i)]];
        }
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(Aug);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) break;
        const Eigen::VectorXd d = ldlt.solve(bs);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < ns; ++i) {
          const Eigen::Index k = free[static_cast<std::size_t>(sub[static_cast<std::size_t>(i)])];
          const bool out_lower = x[k] <= box.lower[k] + kActiveSlack && d[i] < 0.0;
          const bool out_upper = x[k] >= box.upper[k] - kActiveSlack && d[i] > 0.0;
          if (!out_lower && !out_upper) keep.push_back(sub[static_cast<std::size_t>(i)]);
        }
        if (keep.size() == sub.size()) {
          delta_f = Eigen::VectorXd::Zero(nf);
          for (Eigen::Index i = 0; i < ns; ++i) delta_f[sub[static_cast<std::size_t>(i)]] = d[i];
          solved = true;
          break;
        }
        sub = std::move(keep);
      }
      if (!solved) {
        lambda *= 4.0;
        continue;
      }
      Eigen::VectorXd trial = x;
      for (Eigen::Index c = 0; c < nf; ++c) trial[free[c]] += delta_f[c];
      trial = box.project(trial);
      step_norm = (trial - x).lpNorm<Eigen::Infinity>();
      if (step_norm <= opt.tol_step * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
      Eigen::VectorXd r_trial;
      const double q_trial = safe_objective(residual, trial, r_trial);
      if (q_trial < q) {
        x = trial;
        r = r_trial;
        q = q_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted || step_norm <= opt.tol_step * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      res.converged = true;
      res.reason = "step";
      break;
    }
  }
  res.x = x;
  res.objective = q;
  return res;
}

}  // namespace mlate
