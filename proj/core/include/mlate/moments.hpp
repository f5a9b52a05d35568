#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlate/data_model.hpp"

namespace mlate {

// Position of each moment in g. The vector has 4K+3 entries in both modes:
//   [0]                    r - Z
//   [1 + zK + k]           treatment-probability moment of cell (z, v_k)
//   [1 + 2K + zK + k]      outcome-contrast moment of cell (z, v_k)
//   [4K + 1]               true first stage
//   [4K + 2]               LATE
struct MomentLayout {
  Mode mode = Mode::CaseII;
  std::size_t K = 2;

  std::size_t size() const { return 4 * K + 3; }
  static constexpr std::size_t r() { return 0; }
  std::size_t p(int z, std::size_t k) const { return 1 + static_cast<std::size_t>(z) * K + k; }
  std::size_t tau(int z, std::size_t k) const { return 1 + 2 * K + static_cast<std::size_t>(z) * K + k; }
  std::size_t delta_p() const { return 4 * K + 1; }
  std::size_t beta() const { return 4 * K + 2; }

  std::size_t parameter_count() const { return ParamLayout{mode, K}.size(); }
  // 2K-6 in case (i), 2K-4 in case (ii); negative means under-identified.
  long overidentification() const {
    return static_cast<long>(size()) - static_cast<long>(parameter_count());
  }
  std::vector<std::string> labels(const std::vector<std::string>& v_labels = {}) const;
};

struct MomentEval {
  Eigen::VectorXd gbar;
  Eigen::MatrixXd omega;     // (1/n) sum g_i g_i'
  Eigen::MatrixXd jacobian;  // d gbar / d theta', (4K+3) x dim(theta)
};

// Throws DomainError naming the first offending component when theta leaves
// the region where g is defined.
void check_moment_domain(const ParamVector& theta);

// Writes g(obs, theta) into out (size 4K+3).
void moment_vector(const Observation& obs, const ParamVector& theta, const MomentLayout& layout,
                   Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd moment_vector(const Observation& obs, const ParamVector& theta, const MomentLayout& layout);

// Weighted counts and outcome sums per (z, v_k, t) cell. g is affine in Y
// within a cell, so these determine the sample mean of g exactly.
struct MomentSums {
  std::size_t K = 0;
  double total = 0.0;
  std::array<std::vector<std::array<double, 2>>, 2> w;
  std::array<std::vector<std::array<double, 2>>, 2> wy;
};

MomentSums moment_sums(const Dataset& ds);

// Weighted mean of g over the rows of ds.
Eigen::VectorXd sample_moments(const Dataset& ds, const ParamVector& theta);
Eigen::VectorXd sample_moments(const MomentSums& sums, const ParamVector& theta);

// Uncentered second moment (1/n) sum g_i g_i'. Rows are streamed, so memory
// stays at O((4K+3)^2).
Eigen::MatrixXd moment_outer(const Dataset& ds, const ParamVector& theta);

// Central differences of sample_moments; column j uses h_j = step max(1,|theta_j|).
Eigen::MatrixXd moment_jacobian(const Dataset& ds, const ParamVector& theta, double step = 1e-6);
Eigen::MatrixXd moment_jacobian(const MomentSums& sums, const ParamVector& theta, double step = 1e-6);

MomentEval evaluate_moments(const Dataset& ds, const ParamVector& theta, double step = 1e-6);

}  // namespace mlate
