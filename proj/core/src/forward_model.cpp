#include "mlate/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mlate/errors.hpp"

namespace mlate {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSingularRelTol = 1e-12;

void require_monotone(double m0, double m1) {
  if (!(m0 + m1 < 1.0)) {
    std::ostringstream msg;
    msg << "m0 + m1 = " << m0 + m1 << " is not below one";
    throw Error(ErrorKind::MonotonicityViolated, msg.str());
  }
}

void require_interior(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream msg;
    msg << what << " = " << p << " is not strictly inside (0,1)";
    throw Error(ErrorKind::DegenerateCell, msg.str());
  }
}

double clamp_probability(double p, const char* what) {
  if (p >= 0.0 && p <= 1.0) return p;
  if (p < 0.0 && p >= -kProbabilityClampTolerance) return 0.0;
  if (p > 1.0 && p <= 1.0 + kProbabilityClampTolerance) return 1.0;
  std::ostringstream msg;
  msg << what << " = " << p << " falls outside [0,1]";
  throw Error(ErrorKind::InvalidProbability, msg.str());
}

BPair solve_2x2(const WTriple& a, const WTriple& b) {
  const double det = system_determinant(a, b);
  const double scale = std::abs(a.w0 * b.w1) + std::abs(b.w0 * a.w1);
  if (!std::isfinite(det) || scale == 0.0 || std::abs(det) <= kSingularRelTol * scale) {
    std::ostringstream msg;
    msg << "determinant " << det << " is numerically zero";
    throw Error(ErrorKind::SingularSystem, msg.str());
  }
  // Cramer's rule on [w0 w1] [B0 B1]' = -w2.
  BPair out;
  out.b0 = (-a.w2 * b.w1 + b.w2 * a.w1) / det;
  out.b1 = (-a.w0 * b.w2 + b.w0 * a.w2) / det;
  return out;
}

bool usable(const Cell& c) { return std::isfinite(c.tau) && c.p > 0.0 && c.p < 1.0; }

WTriple cell_triple(const CellStats& st, int z, std::size_t v, std::size_t vp) {
  const Cell& a = st.cell(z, v);
  const Cell& b = st.cell(z, vp);
  return w_triple(a.tau, b.tau, a.p, b.p);
}

void try_solve(SystemCandidate& cand, const WTriple& a, const WTriple& b) {
  try {
    cand.b = solve_2x2(a, b);
    const double d = (cand.b->b0 - cand.b->b1 + 1.0);
    cand.discriminant = d * d - 4.0 * cand.b->b0;
    cand.rates = b_to_m(*cand.b);
  } catch (const Error& e) {
    cand.error = e.what();
  }
}

std::vector<SystemCandidate> case_i_candidates(const CellStats& st, int z) {
  std::vector<SystemCandidate> out;
  const std::size_t K = st.K;
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = 0; b < K; ++b) {
      for (std::size_t c = b + 1; c < K; ++c) {
        if (b == a || c == a) continue;
        SystemCandidate cand;
        cand.z = z;
        cand.points = {a, b, c};
        if (!usable(st.cell(z, a)) || !usable(st.cell(z, b)) || !usable(st.cell(z, c))) {
          cand.determinant = kNaN;
          cand.error = "cell lacks a treatment arm or has a boundary probability";
          out.push_back(cand);
          continue;
        }
        const WTriple w12 = cell_triple(st, z, a, b);
        const WTriple w13 = cell_triple(st, z, a, c);
        cand.determinant = system_determinant(w12, w13);
        try_solve(cand, w12, w13);
        out.push_back(cand);
      }
    }
  }
  return out;
}

std::vector<SystemCandidate> case_ii_candidates(const CellStats& st) {
  std::vector<SystemCandidate> out;
  const std::size_t K = st.K;
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = a + 1; b < K; ++b) {
      SystemCandidate cand;
      cand.points = {a, b, b};
      bool ok = true;
      for (int z = 0; z < 2; ++z) ok = ok && usable(st.cell(z, a)) && usable(st.cell(z, b));
      if (!ok) {
        cand.determinant = kNaN;
        cand.error = "cell lacks a treatment arm or has a boundary probability";
        out.push_back(cand);
        continue;
      }
      const WTriple w0 = cell_triple(st, 0, a, b);
      const WTriple w1 = cell_triple(st, 1, a, b);
      cand.determinant = system_determinant(w0, w1);
      try_solve(cand, w0, w1);
      out.push_back(cand);
    }
  }
  return out;
}

// Pinned points if given, otherwise the candidate with the largest |det|.
const SystemCandidate& select_candidate(const std::vector<SystemCandidate>& cands, int z, Mode mode,
                                        const IdentifyOptions& opt) {
  const SystemCandidate* best = nullptr;
  for (const SystemCandidate& c : cands) {
    if (c.z != z) continue;
    if (opt.points) {
      const auto& p = *opt.points;
      bool match = mode == Mode::CaseI ? (c.points[0] == p[0] && ((c.points[1] == p[1] && c.points[2] == p[2]) ||
                                                                  (c.points[1] == p[2] && c.points[2] == p[1])))
                                       : ((c.points[0] == p[0] && c.points[1] == p[1]) ||
                                          (c.points[0] == p[1] && c.points[1] == p[0]));
      if (match) return c;
      continue;
    }
    if (!std::isfinite(c.determinant)) continue;
    if (best == nullptr || std::abs(c.determinant) > std::abs(best->determinant)) best = &c;
  }
  if (opt.points) throw Error(ErrorKind::InvalidArgument, "pinned support points do not form a valid system");
  if (best == nullptr) {
    throw Error(ErrorKind::EmptyCell, "no candidate system has populated treatment arms in every cell");
  }
  return *best;
}

}  // namespace

double implied_p(double m0, double m1, double p_star) {
  require_monotone(m0, m1);
  return m0 + (1.0 - m0 - m1) * p_star;
}

double m_factor(double m0, double m1, double p) {
  require_monotone(m0, m1);
  require_interior(p, "p");
  return (1.0 - m0 * (1.0 - m1) / p - (1.0 - m0) * m1 / (1.0 - p)) / (1.0 - m0 - m1);
}

double implied_tau(double m0, double m1, double p, double tau_star) { return m_factor(m0, m1, p) * tau_star; }

WTriple w_triple(double tau_v, double tau_vp, double p_v, double p_vp) {
  require_interior(p_v, "p_v");
  require_interior(p_vp, "p_v'");
  return {tau_v / p_vp - tau_vp / p_v, tau_v / (1.0 - p_vp) - tau_vp / (1.0 - p_v), tau_vp - tau_v};
}

BPair m_to_b(double m0, double m1) { return {m0 * (1.0 - m1), (1.0 - m0) * m1}; }

double system_determinant(const WTriple& a, const WTriple& b) { return a.w0 * b.w1 - b.w0 * a.w1; }

BPair solve_b_case_i(const WTriple& w12, const WTriple& w13) { return solve_2x2(w12, w13); }

BPair solve_b_case_ii(const WTriple& w_z0, const WTriple& w_z1) { return solve_2x2(w_z0, w_z1); }

MisclassRates b_to_m(const BPair& b) {
  const double d = b.b0 - b.b1 + 1.0;
  const double disc = d * d - 4.0 * b.b0;
  if (!std::isfinite(disc) || disc < -kDiscriminantTolerance) {
    std::ostringstream msg;
    msg << "discriminant " << disc << " is negative (B0=" << b.b0 << ", B1=" << b.b1 << ")";
    throw Error(ErrorKind::NegativeDiscriminant, msg.str());
  }
  MisclassRates out;
  const double s = std::sqrt(std::max(disc, 0.0));
  out.m0 = clamp_probability((d - s) / 2.0, "m0");
  out.m1 = clamp_probability(1.0 - out.m0 - s, "m1");
  if (out.m0 >= 1.0 || out.m1 >= 1.0) throw Error(ErrorKind::InvalidProbability, "recovered misclassification equals one");
  out.s = 1.0 - out.m0 - out.m1;
  if (!(out.s > 0.0)) throw Error(ErrorKind::MonotonicityViolated, "recovered m0 + m1 is not below one");
  return out;
}

double p_star_from_p(double p, double m0, double m1) {
  require_monotone(m0, m1);
  return clamp_probability((p - m0) / (1.0 - m0 - m1), "p*");
}

double late_from_reduced(double mu1, double mu0, double dp_star) {
  if (!(std::abs(dp_star) > kFirstStageTolerance)) {
    std::ostringstream msg;
    msg << "true first stage " << dp_star << " is numerically zero";
    throw Error(ErrorKind::WeakFirstStage, msg.str());
  }
  return (mu1 - mu0) / dp_star;
}

std::vector<SystemCandidate> nonsingularity_diag(const CellStats& stats, Mode mode) {
  if (mode == Mode::CaseII) return case_ii_candidates(stats);
  std::vector<SystemCandidate> out = case_i_candidates(stats, 0);
  std::vector<SystemCandidate> arm1 = case_i_candidates(stats, 1);
  out.insert(out.end(), arm1.begin(), arm1.end());
  return out;
}

IdentifyResult identify(const CellStats& st, Mode mode, const IdentifyOptions& options) {
  if (mode == Mode::CaseI && st.K < 3) throw Error(ErrorKind::InvalidArgument, "CaseI requires K >= 3 support points of V");
  if (mode == Mode::CaseII && st.K < 2) throw Error(ErrorKind::InvalidArgument, "CaseII requires K >= 2 support points of V");
  if (options.points) {
    for (std::size_t i = 0; i < (mode == Mode::CaseI ? 3u : 2u); ++i) {
      if ((*options.points)[i] >= st.K) throw Error(ErrorKind::InvalidArgument, "pinned support point out of range");
    }
  }

  IdentifyResult res;
  res.candidates = nonsingularity_diag(st, mode);
  res.theta = ParamVector(mode, st.K);
  ParamVector& th = res.theta;

  std::array<MisclassRates, 2> rates;
  if (mode == Mode::CaseI) {
    for (int z = 0; z < 2; ++z) {
      const SystemCandidate& c = select_candidate(res.candidates, z, mode, options);
      const auto [a, b, d] = c.points;
      const BPair bp = solve_b_case_i(cell_triple(st, z, a, b), cell_triple(st, z, a, d));
      rates[z] = b_to_m(bp);
      res.points[z] = c.points;
      res.determinant[z] = c.determinant;
      res.discriminant[z] = c.discriminant;
    }
  } else {
    const SystemCandidate& c = select_candidate(res.candidates, -1, mode, options);
    const auto [a, b, unused] = c.points;
    (void)unused;
    const BPair bp = solve_b_case_ii(cell_triple(st, 0, a, b), cell_triple(st, 1, a, b));
    rates[0] = rates[1] = b_to_m(bp);
    res.points[0] = res.points[1] = c.points;
    res.determinant[0] = res.determinant[1] = c.determinant;
    res.discriminant[0] = res.discriminant[1] = c.discriminant;
  }

  for (int z = 0; z < 2; ++z) {
    const MisclassRates& mr = rates[z];
    th.m0[z] = mr.m0;
    th.m1[z] = mr.m1;
    res.s[z] = mr.s;
    for (std::size_t k = 0; k < st.K; ++k) th.p_star[z][k] = p_star_from_p(st.cell(z, k).p, mr.m0, mr.m1);

    // tau* from the selected point whose attenuation factor is largest.
    const std::size_t used = mode == Mode::CaseI ? 3 : 2;
    double best_m = 0.0;
    std::size_t best_k = res.points[z][0];
    for (std::size_t i = 0; i < used; ++i) {
      const std::size_t k = res.points[z][i];
      const double m = m_factor(mr.m0, mr.m1, st.cell(z, k).p);
      if (std::abs(m) > std::abs(best_m)) {
        best_m = m;
        best_k = k;
      }
    }
    if (best_m == 0.0) throw Error(ErrorKind::SingularSystem, "attenuation factor vanishes at every selected point");
    th.tau_star[z] = st.cell(z, best_k).tau / best_m;
  }

  th.r = st.r_hat;
  th.delta_p_star = (st.p_z[1] - th.m0[1]) / res.s[1] - (st.p_z[0] - th.m0[0]) / res.s[0];
  th.beta_star = late_from_reduced(st.mu_z[1], st.mu_z[0], th.delta_p_star);
  return res;
}

double implied_delta_p_star(const ParamVector& theta, const VProbabilities& v_probs) {
  std::array<double, 2> p{0.0, 0.0};
  for (int z = 0; z < 2; ++z) {
    for (std::size_t k = 0; k < theta.K; ++k) p[z] += v_probs[z][k] * theta.p_star[z][k];
  }
  return p[1] - p[0];
}

CellStats population_cell_stats(const ParamVector& theta, const VProbabilities& v_probs, double mu0) {
  const std::size_t K = theta.K;
  for (int z = 0; z < 2; ++z) {
    if (v_probs[z].size() != K) throw Error(ErrorKind::InvalidArgument, "V distribution does not have K entries");
  }
  CellStats st;
  st.K = K;
  st.n = 1.0;
  st.r_hat = theta.r;
  const double dp = implied_delta_p_star(theta, v_probs);
  st.mu_z = {mu0, mu0 + theta.beta_star * dp};
  for (int z = 0; z < 2; ++z) {
    const double pz = z == 1 ? theta.r : 1.0 - theta.r;
    st.n_z[z] = pz;
    st.cells[z].assign(K, Cell{});
    double p_bar = 0.0;
    double pt_bar = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      Cell& c = st.cells[z][k];
      c.n = pz * v_probs[z][k];
      c.p = implied_p(theta.m0[z], theta.m1[z], theta.p_star[z][k]);
      c.tau = implied_tau(theta.m0[z], theta.m1[z], c.p, theta.tau_star[z]);
      c.n_t = {c.n * (1.0 - c.p), c.n * c.p};
      p_bar += v_probs[z][k] * c.p;
      pt_bar += v_probs[z][k] * c.p * c.tau;
    }
    st.p_z[z] = p_bar;
    const double baseline = st.mu_z[z] - pt_bar;
    for (Cell& c : st.cells[z]) c.y_mean = {baseline, baseline + c.tau};
  }
  return st;
}

}  // namespace mlate
