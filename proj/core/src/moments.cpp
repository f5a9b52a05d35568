#include "mlate/moments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlate/errors.hpp"

namespace mlate {
namespace {

// Quantities of theta reused by every row.
struct Precomputed {
  double r;
  double dp;
  std::array<double, 2> m0;
  std::array<double, 2> m1;
  std::array<double, 2> s;
  std::array<std::vector<double>, 2> p;  // implied observed probability per cell
};

Precomputed precompute(const ParamVector& th) {
  Precomputed pc;
  pc.r = th.r;
  pc.dp = th.delta_p_star;
  for (int z = 0; z < 2; ++z) {
    pc.m0[z] = th.m0[z];
    pc.m1[z] = th.m1[z];
    pc.s[z] = 1.0 - th.m0[z] - th.m1[z];
    pc.p[z].resize(th.K);
    for (std::size_t k = 0; k < th.K; ++k) pc.p[z][k] = th.m0[z] + pc.s[z] * th.p_star[z][k];
  }
  return pc;
}

// Adds w * g(obs, theta) into acc for an observation in cell (z, v_k) with
// treatment t; g is affine in y, so only the weight w and the weighted
// outcome wy are needed. Only the five entries that can be nonzero are touched.
template <typename Acc>
void accumulate_cell(int t, int zi, std::size_t k, double w, double wy, const ParamVector& th, const Precomputed& pc,
                     const MomentLayout& lay, Acc& acc) {
  const double z = zi;
  acc[lay.r()] += w * (pc.r - z);

  const double m0 = pc.m0[zi];
  const double m1 = pc.m1[zi];
  const double ps = th.p_star[zi][k];
  const double p = pc.p[zi][k];
  const double tau = th.tau_star[zi];
  acc[lay.p(zi, k)] += w * (p - t);
  acc[lay.tau(zi, k)] += w * tau + (wy * t - w * (1.0 - m1) * ps * tau) / p -
                         (wy * (1.0 - t) + w * (1.0 - m0) * (1.0 - ps) * tau) / (1.0 - p);

  const double fs = (t * z / pc.r - pc.m0[1]) / pc.s[1] - (t * (1.0 - z) / (1.0 - pc.r) - pc.m0[0]) / pc.s[0];
  acc[lay.delta_p()] += w * (pc.dp - fs);
  acc[lay.beta()] += w * th.beta_star - wy * (z / pc.r - (1.0 - z) / (1.0 - pc.r)) / pc.dp;
}

template <typename Acc>
void accumulate_row(const Observation& o, const ParamVector& th, const Precomputed& pc, const MomentLayout& lay,
                    double w, Acc& acc) {
  accumulate_cell(o.t, o.z, static_cast<std::size_t>(o.v), w, w * o.y, th, pc, lay, acc);
}

void check_row(const Observation& o, std::size_t K) {
  if ((o.t != 0 && o.t != 1) || (o.z != 0 && o.z != 1) || o.v < 0 || static_cast<std::size_t>(o.v) >= K) {
    throw Error(ErrorKind::InvalidArgument, "observation violates the data invariants");
  }
}

}  // namespace

std::vector<std::string> MomentLayout::labels(const std::vector<std::string>& v_labels) const {
  std::vector<std::string> out(size());
  out[r()] = "r";
  for (int z = 0; z < 2; ++z) {
    for (std::size_t k = 0; k < K; ++k) {
      std::string cell = std::to_string(z) + "_" + (k < v_labels.size() ? v_labels[k] : std::to_string(k));
      out[p(z, k)] = "p_" + cell;
      out[tau(z, k)] = "tau_" + cell;
    }
  }
  out[delta_p()] = "delta_p_star";
  out[beta()] = "beta_star";
  return out;
}

void check_moment_domain(const ParamVector& th) {
  auto fail = [](const std::string& component, const std::string& why) {
    throw Error(ErrorKind::DomainError, component + ": " + why);
  };
  if (th.p_star[0].size() != th.K || th.p_star[1].size() != th.K) fail("layout", "p_star does not have K entries");
  if (!(std::isfinite(th.r) && th.r > 0.0 && th.r < 1.0)) fail("r-moment", "r must lie in (0,1)");
  if (!(std::isfinite(th.delta_p_star) && th.delta_p_star != 0.0)) fail("beta-moment", "delta_p_star must be nonzero");
  if (!std::isfinite(th.beta_star)) fail("beta-moment", "beta_star is not finite");
  for (int z = 0; z < 2; ++z) {
    const double s = 1.0 - th.m0[z] - th.m1[z];
    if (!(std::isfinite(s) && s > 0.0)) fail("delta_p-moment", "m0+m1 must be below one for z=" + std::to_string(z));
    if (!std::isfinite(th.tau_star[z])) fail("tau-moment(z=" + std::to_string(z) + ")", "tau_star is not finite");
    for (std::size_t k = 0; k < th.K; ++k) {
      const double p = th.m0[z] + s * th.p_star[z][k];
      if (!(std::isfinite(p) && p > 0.0 && p < 1.0)) {
        std::ostringstream msg;
        msg << "implied probability " << p << " outside (0,1)";
        fail("tau-moment(z=" + std::to_string(z) + ",k=" + std::to_string(k) + ")", msg.str());
      }
    }
  }
}

void moment_vector(const Observation& obs, const ParamVector& theta, const MomentLayout& layout,
                   Eigen::Ref<Eigen::VectorXd> out) {
  if (static_cast<std::size_t>(out.size()) != layout.size() || layout.K != theta.K) {
    throw Error(ErrorKind::InvalidArgument, "moment layout does not match parameter vector");
  }
  check_row(obs, theta.K);
  check_moment_domain(theta);
  out.setZero();
  const Precomputed pc = precompute(theta);
  accumulate_row(obs, theta, pc, layout, 1.0, out);
}

Eigen::VectorXd moment_vector(const Observation& obs, const ParamVector& theta, const MomentLayout& layout) {
  Eigen::VectorXd out(layout.size());
  moment_vector(obs, theta, layout, out);
  return out;
}

MomentSums moment_sums(const Dataset& ds) {
  if (ds.rows.empty()) throw Error(ErrorKind::EmptyCell, "dataset is empty");
  MomentSums sums;
  sums.K = ds.support_size();
  for (int z = 0; z < 2; ++z) {
    sums.w[z].assign(sums.K, {0.0, 0.0});
    sums.wy[z].assign(sums.K, {0.0, 0.0});
  }
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Observation& o = ds.rows[i];
    check_row(o, sums.K);
    const double w = ds.weight(i);
    sums.w[o.z][o.v][o.t] += w;
    sums.wy[o.z][o.v][o.t] += w * o.y;
  }
  sums.total = ds.total_weight();
  return sums;
}

Eigen::VectorXd sample_moments(const MomentSums& sums, const ParamVector& theta) {
  if (sums.K != theta.K) throw Error(ErrorKind::InvalidArgument, "support size differs from parameter K");
  if (!(sums.total > 0.0)) throw Error(ErrorKind::EmptyCell, "dataset is empty");
  check_moment_domain(theta);
  const MomentLayout lay{theta.mode, theta.K};
  const Precomputed pc = precompute(theta);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(lay.size());
  for (int z = 0; z < 2; ++z) {
    for (std::size_t k = 0; k < sums.K; ++k) {
      for (int t = 0; t < 2; ++t) {
        if (sums.w[z][k][t] == 0.0 && sums.wy[z][k][t] == 0.0) continue;
        accumulate_cell(t, z, k, sums.w[z][k][t], sums.wy[z][k][t], theta, pc, lay, acc);
      }
    }
  }
  return acc / sums.total;
}

Eigen::VectorXd sample_moments(const Dataset& ds, const ParamVector& theta) {
  if (ds.rows.empty()) throw Error(ErrorKind::EmptyCell, "dataset is empty");
  if (ds.support_size() != theta.K) throw Error(ErrorKind::InvalidArgument, "support size differs from parameter K");
  return sample_moments(moment_sums(ds), theta);
}

Eigen::MatrixXd moment_outer(const Dataset& ds, const ParamVector& theta) {
  if (ds.rows.empty()) throw Error(ErrorKind::EmptyCell, "dataset is empty");
  check_moment_domain(theta);
  const MomentLayout lay{theta.mode, theta.K};
  const Precomputed pc = precompute(theta);
  const Eigen::Index m = static_cast<Eigen::Index>(lay.size());
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd g(m);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    check_row(ds.rows[i], theta.K);
    g.setZero();
    accumulate_row(ds.rows[i], theta, pc, lay, 1.0, g);
    omega.selfadjointView<Eigen::Lower>().rankUpdate(g, ds.weight(i));
  }
  omega = omega.selfadjointView<Eigen::Lower>();
  return omega / ds.total_weight();
}

Eigen::MatrixXd moment_jacobian(const MomentSums& sums, const ParamVector& theta, double step) {
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "finite-difference step must be positive");
  const Eigen::VectorXd x = theta.to_vector();
  const MomentLayout lay{theta.mode, theta.K};
  Eigen::MatrixXd jac(lay.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up[j] += h;
    down[j] -= h;
    ParamVector th_up = ParamVector::from_vector(theta.mode, theta.K, up);
    ParamVector th_down = ParamVector::from_vector(theta.mode, theta.K, down);
    try {
      check_moment_domain(th_up);
      check_moment_domain(th_down);
    } catch (const Error& e) {
      throw Error(ErrorKind::DomainError, "finite-difference perturbation of coordinate " + std::to_string(j) +
                                              " leaves the moment domain (" + e.what() + ")");
    }
    jac.col(j) = (sample_moments(sums, th_up) - sample_moments(sums, th_down)) / (2.0 * h);
  }
  return jac;
}

Eigen::MatrixXd moment_jacobian(const Dataset& ds, const ParamVector& theta, double step) {
  return moment_jacobian(moment_sums(ds), theta, step);
}

MomentEval evaluate_moments(const Dataset& ds, const ParamVector& theta, double step) {
  MomentEval ev;
  ev.gbar = sample_moments(ds, theta);
  ev.omega = moment_outer(ds, theta);
  ev.jacobian = moment_jacobian(ds, theta, step);
  return ev;
}

}  // namespace mlate
