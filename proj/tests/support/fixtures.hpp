#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mlate/data_model.hpp"
#include "mlate/forward_model.hpp"

namespace mlate::testing {

// One weighted row per (z, v, t) cell carrying the cell mean outcome. Sample
// moments of such a dataset equal the population moments of stats exactly.
Dataset weighted_rows(const CellStats& stats, Mode mode);

// Rows from (y, t, z, v) tuples with labels "0".."K-1".
struct Row {
  double y;
  int t;
  int z;
  int v;
};
Dataset make_dataset(const std::vector<Row>& rows, std::size_t K, Mode mode = Mode::CaseII);

struct Draw {
  ParamVector theta;
  VProbabilities v_probs;
};

// A random parameter vector satisfying the round-trip screening rules:
// m0 + m1 <= 0.9, |tau*| >= 0.1, p* separated by at least 0.05 within an arm,
// implied p in [0.02, 0.98], and dp* consistent with v_probs.
Draw random_draw(Mode mode, std::size_t K, std::mt19937_64& rng);

// Case (ii), K = 2 example with shared m0 = m1 = 0.25.
Draw reference_draw();

}  // namespace mlate::testing
