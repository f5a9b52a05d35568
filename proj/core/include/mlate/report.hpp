#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlate/baselines.hpp"
#include "mlate/data_model.hpp"
#include "mlate/forward_model.hpp"
#include "mlate/gmm.hpp"
#include "mlate/montecarlo.hpp"

namespace mlate {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchemaVersion = "1";

// Output of every command. The JSON layout is described by
// schemas/report.schema.json; undefined numbers (NaN) are written as null.
struct Report {
  Json doc = Json::object();

  std::string to_json(int indent = 2) const;
  static Report from_json(const std::string& text);
  // Same content as to_json with reals rounded to three decimals.
  std::string to_text() const;
};

const char* software_version();

Json metadata_json(std::optional<std::uint64_t> seed, bool timestamp = true);
Json number(double x);
Json cells_json(const CellStats& st, const Dataset& ds);
Json params_json(const ParamVector& theta, const std::vector<std::string>& v_labels);
Json estimate_json(const Estimate& est, const std::vector<std::string>& v_labels);
Json regression_json(const RegressionResult& r);
Json candidates_json(const std::vector<SystemCandidate>& cands, const std::vector<std::string>& v_labels);
Json identify_json(const IdentifyResult& id, const std::vector<std::string>& v_labels);
Json mc_json(const McSummary& s);

}  // namespace mlate
