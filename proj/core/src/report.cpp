#include "mlate/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "mlate/errors.hpp"
#include "mlate/moments.hpp"

#ifndef MLATE_VERSION
#define MLATE_VERSION "0.0.0"
#endif

namespace mlate {
namespace {

std::string scalar_text(const Json& v) {
  if (v.is_null()) return "NA";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v.get<double>();
    std::string s = os.str();
    if (s == "-0.000") s = "0.000";
    return s;
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

bool is_scalar(const Json& v) { return !v.is_object() && !v.is_array(); }

// An array of flat objects sharing one key set prints as a table.
bool is_table(const Json& v) {
  if (!v.is_array() || v.empty()) return false;
  const Json& first = v.front();
  if (!first.is_object() || first.empty()) return false;
  for (const Json& row : v) {
    if (!row.is_object() || row.size() != first.size()) return false;
    auto a = row.begin();
    auto b = first.begin();
    for (; a != row.end(); ++a, ++b) {
      if (a.key() != b.key() || !is_scalar(a.value())) return false;
    }
  }
  return true;
}

void render_table(std::ostream& os, const Json& rows, const std::string& pad) {
  std::vector<std::string> keys;
  for (auto it = rows.front().begin(); it != rows.front().end(); ++it) keys.push_back(it.key());
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width(keys.size());
  for (std::size_t j = 0; j < keys.size(); ++j) width[j] = keys[j].size();
  for (const Json& row : rows) {
    std::vector<std::string> line;
    for (std::size_t j = 0; j < keys.size(); ++j) {
      line.push_back(scalar_text(row.at(keys[j])));
      width[j] = std::max(width[j], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    os << pad;
    for (std::size_t j = 0; j < line.size(); ++j) {
      if (j > 0) os << "  ";
      os << std::setw(static_cast<int>(width[j])) << line[j];
    }
    os << '\n';
  };
  emit(keys);
  for (const auto& line : cells) emit(line);
}

void render(std::ostream& os, const Json& v, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (auto it = v.begin(); it != v.end(); ++it) {
    const Json& x = it.value();
    if (is_scalar(x)) {
      os << pad << it.key() << ": " << scalar_text(x) << '\n';
    } else if (x.is_array() && std::all_of(x.begin(), x.end(), is_scalar)) {
      os << pad << it.key() << ": [";
      for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << scalar_text(x[i]);
      os << "]\n";
    } else if (is_table(x)) {
      os << pad << it.key() << ":\n";
      render_table(os, x, pad + "  ");
    } else if (x.is_array()) {
      os << pad << it.key() << ":\n";
      for (std::size_t i = 0; i < x.size(); ++i) {
        os << pad << "  [" << i << "]\n";
        if (x[i].is_object()) {
          render(os, x[i], depth + 2);
        } else if (x[i].is_array() && std::all_of(x[i].begin(), x[i].end(), is_scalar)) {
          os << pad << "    [";
          for (std::size_t j = 0; j < x[i].size(); ++j) os << (j ? ", " : "") << scalar_text(x[i][j]);
          os << "]\n";
        } else {
          os << pad << "    " << scalar_text(x[i]) << '\n';
        }
      }
    } else {
      os << pad << it.key() << ":\n";
      render(os, x, depth + 1);
    }
  }
}

std::string label(const std::vector<std::string>& v_labels, std::size_t k) {
  return k < v_labels.size() ? v_labels[k] : std::to_string(k);
}

}  // namespace

std::string Report::to_json(int indent) const { return doc.dump(indent) + "\n"; }

Report Report::from_json(const std::string& text) {
  Report r;
  try {
    r.doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("report is not valid JSON: ") + e.what());
  }
  if (!r.doc.is_object()) throw Error(ErrorKind::SchemaError, "report must be a JSON object");
  return r;
}

std::string Report::to_text() const {
  std::ostringstream os;
  render(os, doc, 0);
  return os.str();
}

const char* software_version() { return MLATE_VERSION; }

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json metadata_json(std::optional<std::uint64_t> seed, bool timestamp) {
  Json m;
  m["software"] = "mlate";
  m["version"] = software_version();
  m["seed"] = seed ? Json(*seed) : Json(nullptr);
  if (timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    m["timestamp"] = os.str();
  } else {
    m["timestamp"] = nullptr;
  }
  return m;
}

Json cells_json(const CellStats& st, const Dataset& ds) {
  Json rows = Json::array();
  for (int z = 0; z < 2; ++z) {
    for (std::size_t k = 0; k < st.K; ++k) {
      const Cell& c = st.cell(z, k);
      Json row;
      row["z"] = z;
      row["v"] = label(ds.v_support, k);
      row["n"] = number(c.n);
      row["n_t0"] = number(c.n_t[0]);
      row["n_t1"] = number(c.n_t[1]);
      row["p"] = number(c.p);
      row["y_mean_t0"] = number(c.y_mean[0]);
      row["y_mean_t1"] = number(c.y_mean[1]);
      row["tau"] = number(c.tau);
      rows.push_back(row);
    }
  }
  Json out;
  out["n"] = number(st.n);
  out["K"] = st.K;
  out["mode"] = to_string(ds.mode);
  out["v_support"] = ds.v_support;
  out["r_hat"] = number(st.r_hat);
  out["p_z"] = {number(st.p_z[0]), number(st.p_z[1])};
  out["mu_z"] = {number(st.mu_z[0]), number(st.mu_z[1])};
  out["cells"] = rows;
  return out;
}

Json params_json(const ParamVector& theta, const std::vector<std::string>& v_labels) {
  const std::vector<std::string> names = theta.layout().names(v_labels);
  const Eigen::VectorXd x = theta.to_vector();
  Json out = Json::array();
  for (std::size_t j = 0; j < names.size(); ++j) {
    Json row;
    row["name"] = names[j];
    row["estimate"] = number(x[static_cast<Eigen::Index>(j)]);
    out.push_back(row);
  }
  return out;
}

Json estimate_json(const Estimate& est, const std::vector<std::string>& v_labels) {
  const std::vector<std::string> names = est.theta_hat.layout().names(v_labels);
  const Eigen::VectorXd x = est.theta_hat.to_vector();
  Json params = Json::array();
  for (std::size_t j = 0; j < names.size(); ++j) {
    const Eigen::Index i = static_cast<Eigen::Index>(j);
    Json row;
    row["name"] = names[j];
    row["estimate"] = number(x[i]);
    row["se"] = number(est.se[i]);
    row["ci_lo"] = number(est.ci[j].lo);
    row["ci_hi"] = number(est.ci[j].hi);
    params.push_back(row);
  }
  Json vcov = Json::array();
  for (Eigen::Index r = 0; r < est.vcov.rows(); ++r) {
    Json line = Json::array();
    for (Eigen::Index c = 0; c < est.vcov.cols(); ++c) line.push_back(number(est.vcov(r, c)));
    vcov.push_back(line);
  }
  const MomentLayout ml{est.theta_hat.mode, est.theta_hat.K};
  const std::vector<std::string> mlabels = ml.labels(v_labels);
  Json gbar = Json::array();
  for (Eigen::Index i = 0; i < est.gbar.size(); ++i) {
    Json row;
    row["moment"] = mlabels[static_cast<std::size_t>(i)];
    row["value"] = number(est.gbar[i]);
    gbar.push_back(row);
  }
  Json out;
  out["weighting"] = to_string(est.weighting);
  out["converged"] = est.converged;
  out["iterations"] = est.iterations;
  out["objective"] = number(est.objective);
  out["n"] = number(est.n);
  out["start"] = est.start;
  out["start_diagnostic"] = est.start_diagnostic;
  out["parameters"] = params;
  out["moments"] = gbar;
  out["vcov"] = vcov;
  return out;
}

Json regression_json(const RegressionResult& r) {
  Json coef = Json::array();
  for (Eigen::Index j = 0; j < r.coef.size(); ++j) {
    Json row;
    row["name"] = static_cast<std::size_t>(j) < r.names.size() ? r.names[static_cast<std::size_t>(j)] : std::to_string(j);
    row["coef"] = number(r.coef[j]);
    row["robust_se"] = number(r.robust_se[j]);
    coef.push_back(row);
  }
  Json out;
  out["n"] = number(r.n);
  out["coefficients"] = coef;
  return out;
}

Json candidates_json(const std::vector<SystemCandidate>& cands, const std::vector<std::string>& v_labels) {
  Json out = Json::array();
  for (const SystemCandidate& c : cands) {
    Json row;
    row["z"] = c.z < 0 ? Json(nullptr) : Json(c.z);
    row["v1"] = label(v_labels, c.points[0]);
    row["v2"] = label(v_labels, c.points[1]);
    row["v3"] = c.z < 0 ? Json(nullptr) : Json(label(v_labels, c.points[2]));
    row["determinant"] = number(c.determinant);
    row["b0"] = c.b ? number(c.b->b0) : Json(nullptr);
    row["b1"] = c.b ? number(c.b->b1) : Json(nullptr);
    row["discriminant"] = c.b ? number(c.discriminant) : Json(nullptr);
    row["m0"] = c.rates ? number(c.rates->m0) : Json(nullptr);
    row["m1"] = c.rates ? number(c.rates->m1) : Json(nullptr);
    row["error"] = c.error;
    out.push_back(row);
  }
  return out;
}

Json identify_json(const IdentifyResult& id, const std::vector<std::string>& v_labels) {
  Json arms = Json::array();
  const int n_arms = id.theta.mode == Mode::CaseI ? 2 : 1;
  for (int z = 0; z < n_arms; ++z) {
    Json row;
    row["z"] = id.theta.mode == Mode::CaseI ? Json(z) : Json(nullptr);
    row["v1"] = label(v_labels, id.points[z][0]);
    row["v2"] = label(v_labels, id.points[z][1]);
    row["v3"] = id.theta.mode == Mode::CaseI ? Json(label(v_labels, id.points[z][2])) : Json(nullptr);
    row["determinant"] = number(id.determinant[z]);
    row["discriminant"] = number(id.discriminant[z]);
    row["s"] = number(id.s[z]);
    arms.push_back(row);
  }
  Json out;
  out["selected"] = arms;
  out["parameters"] = params_json(id.theta, v_labels);
  return out;
}

Json mc_json(const McSummary& s) {
  Json rows = Json::array();
  for (const McRow& r : s.rows) {
    Json row;
    row["design"] = r.design;
    row["n"] = r.n;
    row["parameter"] = r.parameter;
    row["estimator"] = r.estimator;
    row["truth"] = number(r.truth);
    row["bias"] = number(r.bias);
    row["sd"] = number(r.sd);
    row["rmse"] = number(r.rmse);
    row["cp"] = number(r.cp);
    row["used"] = r.used;
    row["failed"] = r.failed;
    rows.push_back(row);
  }
  Json out;
  out["complier_late"] = number(s.complier_late);
  out["rows"] = rows;
  return out;
}

}  // namespace mlate
