#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mlate/data_model.hpp"

namespace mlate {

// B0 = m0 (1 - m1), B1 = (1 - m0) m1 for one misclassification regime.
struct BPair {
  double b0 = 0.0;
  double b1 = 0.0;
};

// Coefficients of the linear restriction B0 w0 + B1 w1 + w2 = 0 obtained from
// two support points (v, v') within one instrument arm.
struct WTriple {
  double w0 = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
};

struct MisclassRates {
  double m0 = 0.0;
  double m1 = 0.0;
  double s = 1.0;  // 1 - m0 - m1
};

inline constexpr double kDiscriminantTolerance = 1e-8;
inline constexpr double kProbabilityClampTolerance = 1e-6;
inline constexpr double kFirstStageTolerance = 1e-10;

// Observed treatment probability implied by misclassification (m0, m1) and the
// true treatment probability.
double implied_p(double m0, double m1, double p_star);

// Attenuation factor linking observed and true outcome contrasts,
// tau = M(m0, m1, p) tau*.
double m_factor(double m0, double m1, double p);

double implied_tau(double m0, double m1, double p, double tau_star);

WTriple w_triple(double tau_v, double tau_vp, double p_v, double p_vp);

BPair m_to_b(double m0, double m1);

// Case (i): two restrictions from (v1,v2) and (v1,v3) within one arm.
BPair solve_b_case_i(const WTriple& w12, const WTriple& w13);

// Case (ii): one restriction per instrument arm, sharing (B0, B1).
BPair solve_b_case_ii(const WTriple& w_z0, const WTriple& w_z1);

// Inverts the B map on the monotone branch (non-negative root).
MisclassRates b_to_m(const BPair& b);

double p_star_from_p(double p, double m0, double m1);

double late_from_reduced(double mu1, double mu0, double dp_star);

// Determinant of the 2x2 system built from two restrictions.
double system_determinant(const WTriple& a, const WTriple& b);

struct SystemCandidate {
  int z = -1;                               // arm for case (i); -1 for case (ii)
  std::array<std::size_t, 3> points{0, 0, 0};  // (v1, v2, v3); case (ii) uses v1, v2
  double determinant = 0.0;                 // NaN when a cell lacks both arms
  std::optional<BPair> b;
  std::optional<MisclassRates> rates;
  double discriminant = 0.0;
  std::string error;                        // empty when the candidate solves cleanly
};

// Every candidate system with its determinant (the left-minus-right side of
// the nonsingularity inequality) and, where it solves, the implied rates.
std::vector<SystemCandidate> nonsingularity_diag(const CellStats& stats, Mode mode);

struct IdentifyOptions {
  // Pin the support points (indices into the V support) instead of picking
  // the best-conditioned candidate. Case (ii) reads the first two entries.
  std::optional<std::array<std::size_t, 3>> points;
};

struct IdentifyResult {
  ParamVector theta;
  std::array<double, 2> s{1.0, 1.0};
  std::array<double, 2> discriminant{0.0, 0.0};
  std::array<double, 2> determinant{0.0, 0.0};
  std::array<std::array<std::size_t, 3>, 2> points{};  // selected support points per arm
  std::vector<SystemCandidate> candidates;
};

// Closed-form solution of the identification system from cell statistics.
IdentifyResult identify(const CellStats& stats, Mode mode, const IdentifyOptions& options = {});

// P(V = v_k | Z = z) for each arm.
using VProbabilities = std::array<std::vector<double>, 2>;

// True first stage implied by the p* entries of theta and the V distribution.
double implied_delta_p_star(const ParamVector& theta, const VProbabilities& v_probs);

// Exact population cell statistics generated by theta. Cell counts are
// probabilities (n = 1); mu_0 = mu0 and mu_1 = mu0 + beta* dp*, with dp*
// taken from implied_delta_p_star.
CellStats population_cell_stats(const ParamVector& theta, const VProbabilities& v_probs, double mu0 = 0.0);

}  // namespace mlate
