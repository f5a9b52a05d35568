#include "mlate/data_model.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "mlate/errors.hpp"

namespace mlate {

std::string to_string(Mode mode) { return mode == Mode::CaseI ? "case-i" : "case-ii"; }

Mode parse_mode(const std::string& text) {
  if (text == "case-i" || text == "i" || text == "CaseI") return Mode::CaseI;
  if (text == "case-ii" || text == "ii" || text == "CaseII") return Mode::CaseII;
  throw Error(ErrorKind::InvalidArgument, "unknown mode '" + text + "'");
}

double Dataset::total_weight() const {
  if (weights.empty()) return static_cast<double>(rows.size());
  double total = 0.0;
  for (double w : weights) total += w;
  return total;
}

std::vector<double> Dataset::v_values() const {
  std::vector<double> out(v_support.size());
  for (std::size_t k = 0; k < v_support.size(); ++k) {
    const std::string& label = v_support[k];
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), value);
    bool numeric = ec == std::errc() && ptr == label.data() + label.size() && std::isfinite(value);
    out[k] = numeric ? value : static_cast<double>(k);
  }
  return out;
}

std::size_t ParamLayout::size() const { return mode == Mode::CaseI ? 2 * K + 9 : 2 * K + 7; }

std::size_t ParamLayout::m0(int z) const {
  if (mode == Mode::CaseI) return 3 + static_cast<std::size_t>(z) * (K + 3);
  return 3;
}

std::size_t ParamLayout::m1(int z) const {
  if (mode == Mode::CaseI) return 4 + static_cast<std::size_t>(z) * (K + 3);
  return 5 + K;
}

std::size_t ParamLayout::p_star(int z, std::size_t k) const {
  if (mode == Mode::CaseI) return 5 + static_cast<std::size_t>(z) * (K + 3) + k;
  return 4 + static_cast<std::size_t>(z) * (K + 2) + k;
}

std::size_t ParamLayout::tau(int z) const {
  if (mode == Mode::CaseI) return 5 + K + static_cast<std::size_t>(z) * (K + 3);
  return 4 + K + static_cast<std::size_t>(z) * (K + 2);
}

std::vector<std::string> ParamLayout::names(const std::vector<std::string>& v_labels) const {
  std::vector<std::string> out(size());
  out[beta()] = "beta_star";
  out[delta_p()] = "delta_p_star";
  out[r()] = "r";
  for (int z = 0; z < 2; ++z) {
    const std::string zs = std::to_string(z);
    if (mode == Mode::CaseI) {
      out[m0(z)] = "m0_" + zs;
      out[m1(z)] = "m1_" + zs;
    } else {
      out[m0(z)] = "m0";
      out[m1(z)] = "m1";
    }
    for (std::size_t k = 0; k < K; ++k) {
      std::string label = k < v_labels.size() ? v_labels[k] : std::to_string(k);
      out[p_star(z, k)] = "p_star_" + zs + "_" + label;
    }
    out[tau(z)] = "tau_star_" + zs;
  }
  return out;
}

ParamVector::ParamVector(Mode mode_, std::size_t K_) : mode(mode_), K(K_) {
  p_star[0].assign(K, 0.5);
  p_star[1].assign(K, 0.5);
}

Eigen::VectorXd ParamVector::to_vector() const {
  const ParamLayout lay = layout();
  Eigen::VectorXd x(lay.size());
  x[lay.beta()] = beta_star;
  x[lay.delta_p()] = delta_p_star;
  x[lay.r()] = r;
  for (int z = 0; z < 2; ++z) {
    x[lay.m0(z)] = m0[z];
    x[lay.m1(z)] = m1[z];
    for (std::size_t k = 0; k < K; ++k) x[lay.p_star(z, k)] = p_star[z][k];
    x[lay.tau(z)] = tau_star[z];
  }
  // CaseII writes the shared entries twice; z = 1 wins, so keep them equal.
  if (mode == Mode::CaseII) {
    x[lay.m0(0)] = m0[0];
    x[lay.m1(0)] = m1[0];
  }
  return x;
}

ParamVector ParamVector::from_vector(Mode mode, std::size_t K, const Eigen::VectorXd& x) {
  ParamVector out(mode, K);
  const ParamLayout lay = out.layout();
  if (static_cast<std::size_t>(x.size()) != lay.size()) {
    std::ostringstream msg;
    msg << "parameter vector has " << x.size() << " entries, layout expects " << lay.size();
    throw Error(ErrorKind::InvalidArgument, msg.str());
  }
  out.beta_star = x[lay.beta()];
  out.delta_p_star = x[lay.delta_p()];
  out.r = x[lay.r()];
  for (int z = 0; z < 2; ++z) {
    out.m0[z] = x[lay.m0(z)];
    out.m1[z] = x[lay.m1(z)];
    for (std::size_t k = 0; k < K; ++k) out.p_star[z][k] = x[lay.p_star(z, k)];
    out.tau_star[z] = x[lay.tau(z)];
  }
  return out;
}

std::vector<std::string> ParamVector::violations() const {
  std::vector<std::string> out;
  auto in_unit = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
  if (!(std::isfinite(r) && r > 0.0 && r < 1.0)) out.push_back("r must lie in (0,1)");
  if (!std::isfinite(beta_star)) out.push_back("beta_star is not finite");
  if (!std::isfinite(delta_p_star)) out.push_back("delta_p_star is not finite");
  for (int z = 0; z < 2; ++z) {
    const std::string zs = std::to_string(z);
    if (!in_unit(m0[z]) || !in_unit(m1[z])) out.push_back("misclassification probabilities for z=" + zs + " outside [0,1]");
    if (!(m0[z] + m1[z] < 1.0)) out.push_back("monotonicity m0+m1<1 fails for z=" + zs);
    if (p_star[z].size() != K) {
      out.push_back("p_star for z=" + zs + " does not have K entries");
      continue;
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (!in_unit(p_star[z][k])) out.push_back("p_star(" + zs + "," + std::to_string(k) + ") outside [0,1]");
    }
    if (!std::isfinite(tau_star[z])) out.push_back("tau_star for z=" + zs + " is not finite");
  }
  if (mode == Mode::CaseII && (m0[0] != m0[1] || m1[0] != m1[1])) {
    out.push_back("CaseII requires misclassification shared across z");
  }
  return out;
}

std::vector<std::string> validate(const Dataset& ds) {
  std::vector<std::string> out;
  const std::size_t K = ds.support_size();
  if (ds.rows.empty()) {
    out.push_back("dataset is empty");
    return out;
  }
  if (!ds.weights.empty() && ds.weights.size() != ds.rows.size()) {
    out.push_back("weights length does not match row count");
  }
  if (ds.mode == Mode::CaseI && K < 3) out.push_back("CaseI requires K >= 3 support points of V");
  if (ds.mode == Mode::CaseII && K < 2) out.push_back("CaseII requires K >= 2 support points of V");

  // Every bad row is reported, up to a cap.
  constexpr std::size_t kMaxRowMessages = 20;
  std::size_t bad_rows = 0;
  std::array<double, 2> z_weight{0.0, 0.0};
  std::vector<std::array<std::array<double, 2>, 2>> arm(K);  // [k][z][t]
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Observation& o = ds.rows[i];
    const double w = ds.weight(i);
    std::vector<std::string> issues;
    if (!std::isfinite(o.y)) issues.push_back("outcome is not finite");
    if (o.t != 0 && o.t != 1) issues.push_back("treatment must be 0 or 1");
    if (o.z != 0 && o.z != 1) issues.push_back("instrument must be 0 or 1");
    if (o.v < 0 || static_cast<std::size_t>(o.v) >= K) issues.push_back("V index outside support");
    if (!(std::isfinite(w) && w > 0.0)) issues.push_back("weight must be positive");
    if (issues.empty()) {
      z_weight[o.z] += w;
      arm[o.v][o.z][o.t] += w;
      continue;
    }
    for (const auto& what : issues) {
      if (bad_rows < kMaxRowMessages) out.push_back("row " + std::to_string(i) + ": " + what);
    }
    ++bad_rows;
  }
  if (bad_rows > kMaxRowMessages) out.push_back(std::to_string(bad_rows) + " bad rows in total");
  if (bad_rows > 0) return out;

  if (z_weight[0] == 0.0 || z_weight[1] == 0.0) {
    out.push_back("instrument degenerate: Z takes a single value");
  }
  for (int z = 0; z < 2; ++z) {
    for (std::size_t k = 0; k < K; ++k) {
      for (int t = 0; t < 2; ++t) {
        if (arm[k][z][t] == 0.0) {
          out.push_back("cell (z=" + std::to_string(z) + ", v=" + ds.v_support[k] + ", t=" + std::to_string(t) +
                        ") is empty");
        }
      }
    }
  }
  return out;
}

CellStats cell_stats(const Dataset& ds) {
  const std::size_t K = ds.support_size();
  if (ds.rows.empty()) throw Error(ErrorKind::EmptyCell, "dataset is empty");

  CellStats st;
  st.K = K;
  st.cells[0].assign(K, Cell{});
  st.cells[1].assign(K, Cell{});
  std::array<double, 2> y_sum_z{0.0, 0.0};
  std::array<double, 2> t_sum_z{0.0, 0.0};
  std::vector<std::array<std::array<double, 2>, 2>> y_sum(K);  // [k][z][t]

  double z_sum = 0.0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Observation& o = ds.rows[i];
    if (o.v < 0 || static_cast<std::size_t>(o.v) >= K || (o.z != 0 && o.z != 1) || (o.t != 0 && o.t != 1)) {
      throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(i) + " violates the observation invariants");
    }
    const double w = ds.weight(i);
    Cell& c = st.cells[o.z][static_cast<std::size_t>(o.v)];
    c.n += w;
    c.n_t[o.t] += w;
    y_sum[o.v][o.z][o.t] += w * o.y;
    st.n_z[o.z] += w;
    y_sum_z[o.z] += w * o.y;
    t_sum_z[o.z] += w * o.t;
    st.n += w;
    z_sum += w * o.z;
  }

  for (int z = 0; z < 2; ++z) {
    if (st.n_z[z] == 0.0) throw Error(ErrorKind::EmptyCell, "no observations with Z=" + std::to_string(z));
    st.p_z[z] = t_sum_z[z] / st.n_z[z];
    st.mu_z[z] = y_sum_z[z] / st.n_z[z];
    for (std::size_t k = 0; k < K; ++k) {
      Cell& c = st.cells[z][k];
      if (c.n == 0.0) {
        throw Error(ErrorKind::EmptyCell,
                    "cell (z=" + std::to_string(z) + ", v=" + ds.v_support[k] + ") has no observations");
      }
      c.p = c.n_t[1] / c.n;
      for (int t = 0; t < 2; ++t) {
        c.y_mean[t] = c.n_t[t] > 0.0 ? y_sum[k][z][t] / c.n_t[t] : std::numeric_limits<double>::quiet_NaN();
      }
      c.tau = c.has_both_arms() ? c.y_mean[1] - c.y_mean[0] : std::numeric_limits<double>::quiet_NaN();
    }
  }
  st.r_hat = z_sum / st.n;
  return st;
}

}  // namespace mlate
