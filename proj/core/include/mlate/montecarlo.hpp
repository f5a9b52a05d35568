#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mlate/data_model.hpp"
#include "mlate/forward_model.hpp"

namespace mlate {

enum class VRole { Covariate, Instrument, RepeatedMeasure };
enum class OutcomeRule { Homogeneous, HeterogeneousU2 };

std::string to_string(VRole role);
std::string to_string(OutcomeRule rule);

// T* = 1(intercept + z_coef Z + v_coef V - U1 > 0). For a repeated measure
// V is T* flipped with probability v_flip and v_coef is zero.
struct DesignSpec {
  int id = 1;
  VRole v_role = VRole::Covariate;
  double intercept = -1.0;
  double z_coef = 1.0;
  double v_coef = 1.0;
  OutcomeRule outcome = OutcomeRule::Homogeneous;
  double v_effect = 0.0;  // direct effect of V on Y
  double m_t = 0.25;      // Pr(T != T* | T* = t)
  double v_flip = 0.0;
};

// Designs 1..6; throws InvalidArgument otherwise.
DesignSpec design(int id);

inline constexpr double kU2Variance = 0.5;
inline constexpr double kU12Covariance = 0.05;

struct LatentDraw {
  double u1 = 0.0;
  double u2 = 0.0;
  int z = 0;
  int v = 0;
  int t_star = 0;
  double y0 = 0.0;
  double y1 = 0.0;
  int t = 0;
  int u_t = 0;  // t - t_star
};

struct Simulation {
  Dataset data;
  std::vector<LatentDraw> latent;
};

// Deterministic in (seed, stream). Every observation consumes six uniforms
// from a 64-bit Mersenne twister seeded by (seed, stream), so streams for
// different replications never share state.
Simulation generate(const DesignSpec& d, std::size_t n, std::uint64_t seed, std::uint64_t stream = 0);

// Pr(V = v | Z = z) under the design.
VProbabilities v_probabilities(const DesignSpec& d);

// Population parameters in the case (ii), K = 2 layout. tau*_z averages the
// within-(z, v) contrasts E(Y | T* = 1, z, v) - E(Y | T* = 0, z, v) over
// Pr(V | Z = z); beta* is 1 for every design.
ParamVector true_params(const DesignSpec& d);

// E(Y1 - Y0 | complier), from truncated-normal moments.
double complier_late(const DesignSpec& d);

// Draws from the model implied by theta: Z ~ Bern(r), V | Z from v_probs,
// T* | Z, V ~ Bern(p*), T misclassified with (m0z, m1z), and
// Y = mu0 + tau*_z T* + N(0, 1). differential adds differential * T * v to Y
// (v the support index), which breaks non-differential misclassification.
// A shift that does not vary with v is nearly absorbed by the model.
Dataset simulate_model(const ParamVector& theta, const VProbabilities& v_probs, std::size_t n, std::uint64_t seed,
                       std::uint64_t stream = 0, double mu0 = 0.0, double differential = 0.0);

struct StudyConfig {
  int design = 1;
  std::size_t n = 1000;
  std::size_t reps = 500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double level = 0.95;
};

// One line of a summary table. SD divides by the number of used
// replications, so rmse^2 = bias^2 + sd^2.
struct McRow {
  int design = 1;
  std::size_t n = 0;
  std::string parameter;
  std::string estimator;
  double truth = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double cp = 0.0;
  std::size_t used = 0;
  std::size_t failed = 0;
};

struct McSummary {
  std::vector<McRow> rows;
  double complier_late = 0.0;

  const McRow& row(const std::string& parameter, const std::string& estimator) const;
};

// Summary of draws against truth. covered[i] marks CI coverage of draw i.
McRow summarize(const std::vector<double>& draws, const std::vector<bool>& covered, double truth);

// Replication r uses stream r of cfg.seed; the result does not depend on
// cfg.threads.
McSummary run_study(const StudyConfig& cfg);

}  // namespace mlate
