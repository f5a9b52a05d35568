#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mlate {

// Identification regime. CaseI lets misclassification depend on the
// instrument and needs at least three support points of V; CaseII imposes
// Z-invariant misclassification and works with binary V.
enum class Mode { CaseI, CaseII };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct Observation {
  double y = 0.0;
  int t = 0;  // observed (possibly misclassified) treatment
  int z = 0;  // binary instrument
  int v = 0;  // index into Dataset::v_support
};

struct Dataset {
  std::vector<Observation> rows;
  std::vector<std::string> v_support;
  Mode mode = Mode::CaseII;
  // Optional frequency weights; empty means every row has weight one.
  std::vector<double> weights;

  std::size_t size() const { return rows.size(); }
  std::size_t support_size() const { return v_support.size(); }
  double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
  double total_weight() const;

  // Numeric value of each support label, used when V enters a regression.
  // Labels that do not parse as numbers fall back to their index.
  std::vector<double> v_values() const;
};

// Index map of the parameter vector. CaseI follows
//   (beta*, dp*, r, m00, m10, p*_{0,1..K}, tau0*, m01, m11, p*_{1,1..K}, tau1*)
// with 2K+9 entries. CaseII shares (m0, m1) across z and orders entries as
//   (beta*, dp*, r, m0, p*_{0,1..K}, tau0*, m1, p*_{1,1..K}, tau1*)
// with 2K+7 entries.
struct ParamLayout {
  Mode mode = Mode::CaseII;
  std::size_t K = 2;

  std::size_t size() const;
  static constexpr std::size_t beta() { return 0; }
  static constexpr std::size_t delta_p() { return 1; }
  static constexpr std::size_t r() { return 2; }
  std::size_t m0(int z) const;
  std::size_t m1(int z) const;
  std::size_t p_star(int z, std::size_t k) const;
  std::size_t tau(int z) const;
  std::vector<std::string> names(const std::vector<std::string>& v_labels = {}) const;
};

struct ParamVector {
  Mode mode = Mode::CaseII;
  std::size_t K = 2;
  double beta_star = 0.0;
  double delta_p_star = 0.0;
  double r = 0.5;
  std::array<double, 2> m0{0.0, 0.0};
  std::array<double, 2> m1{0.0, 0.0};
  std::array<std::vector<double>, 2> p_star;
  std::array<double, 2> tau_star{0.0, 0.0};

  ParamVector() = default;
  ParamVector(Mode mode, std::size_t K);

  ParamLayout layout() const { return {mode, K}; }
  std::size_t size() const { return layout().size(); }
  double s(int z) const { return 1.0 - m0[z] - m1[z]; }

  Eigen::VectorXd to_vector() const;
  static ParamVector from_vector(Mode mode, std::size_t K, const Eigen::VectorXd& x);

  // Empty when every invariant holds (probabilities in range, r interior,
  // monotonicity, shared misclassification in CaseII, consistent sizes).
  std::vector<std::string> violations() const;
};

struct Cell {
  double n = 0.0;
  std::array<double, 2> n_t{0.0, 0.0};
  std::array<double, 2> y_mean{0.0, 0.0};  // NaN when the arm is empty
  double p = 0.0;
  double tau = 0.0;  // NaN unless both arms are populated

  bool has_both_arms() const { return n_t[0] > 0.0 && n_t[1] > 0.0; }
};

struct CellStats {
  std::size_t K = 0;
  double n = 0.0;
  double r_hat = 0.0;
  std::array<std::vector<Cell>, 2> cells;
  std::array<double, 2> n_z{0.0, 0.0};
  std::array<double, 2> p_z{0.0, 0.0};
  std::array<double, 2> mu_z{0.0, 0.0};

  const Cell& cell(int z, std::size_t k) const { return cells[z][k]; }
};

std::vector<std::string> validate(const Dataset& ds);

// Exact sample frequencies and means. Throws EmptyCell when a (z, v) cell or
// an instrument arm has no observations; a cell missing one treatment arm is
// reported with tau = NaN.
CellStats cell_stats(const Dataset& ds);

}  // namespace mlate
