#include "mlate/commands.hpp"

#include <algorithm>
#include <optional>

#include "mlate/forward_model.hpp"
#include "mlate/montecarlo.hpp"

namespace mlate {
namespace {

Json schema_json(const DataOptions& d) {
  Json out;
  out["data"] = d.path;
  out["outcome"] = d.schema.outcome;
  out["treatment"] = d.schema.treatment;
  out["instrument"] = d.schema.instrument;
  out["exogenous"] = d.schema.exogenous;
  out["mode"] = to_string(d.schema.mode);
  out["delimiter"] = std::string(1, d.schema.delimiter);
  out["header"] = d.schema.header;
  out["v_order"] = d.schema.v_order;
  return out;
}

Report skeleton(const std::string& name, const Json& options, std::optional<std::uint64_t> seed, bool timestamp) {
  Report r;
  r.doc["schema_version"] = kReportSchemaVersion;
  r.doc["command"] = {{"name", name}, {"options", options}};
  r.doc["metadata"] = metadata_json(seed, timestamp);
  return r;
}

CommandResult finish(Report report, int code, const std::string& message) {
  report.doc["status"] = {{"exit_code", code}, {"message", message}};
  return {std::move(report), code, message};
}

CommandResult fail(Report report, const Error& e) { return finish(std::move(report), exit_code_for(e.kind()), e.what()); }

std::optional<std::array<std::size_t, 3>> resolve_points(const std::vector<std::string>& labels, const Dataset& ds) {
  if (labels.empty()) return std::nullopt;
  const std::size_t need = ds.mode == Mode::CaseI ? 3 : 2;
  if (labels.size() != need) {
    throw Error(ErrorKind::InvalidArgument,
                "--points needs " + std::to_string(need) + " V labels in " + to_string(ds.mode));
  }
  std::array<std::size_t, 3> out{0, 0, 0};
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto it = std::find(ds.v_support.begin(), ds.v_support.end(), labels[j]);
    if (it == ds.v_support.end()) throw Error(ErrorKind::SchemaError, "support point '" + labels[j] + "' not in V");
    out[j] = static_cast<std::size_t>(it - ds.v_support.begin());
  }
  return out;
}

// Loads and validates; on failure returns the finished result.
std::optional<CommandResult> load_checked(const DataOptions& opt, Report& report, Dataset& ds) {
  try {
    ds = load_csv(opt.path, opt.schema);
  } catch (const Error& e) {
    return fail(report, e);
  }
  const std::vector<std::string> problems = validate(ds);
  report.doc["diagnostics"]["validation"] = problems;
  if (!problems.empty()) return finish(report, kExitIdentification, problems.front());
  return std::nullopt;
}

}  // namespace

int exit_code_for(ErrorKind kind) { return is_identification_failure(kind) ? kExitIdentification : kExitIo; }

CommandResult cmd_estimate(const EstimateCommand& cmd) {
  Json options = schema_json(cmd.data);
  options["weight"] = to_string(cmd.weighting);
  options["level"] = cmd.level;
  options["robust"] = cmd.flavor == RobustFlavor::HC0 ? "hc0" : "hc1";
  options["points"] = cmd.points;
  Report report = skeleton("estimate", options, std::nullopt, cmd.timestamp);

  Dataset ds;
  if (auto early = load_checked(cmd.data, report, ds)) return *early;
  // ordered_json keeps keys in a vector, so references do not survive insertions.
  auto diag = [&report]() -> Json& { return report.doc["diagnostics"]; };

  GmmConfig cfg;
  cfg.weighting = cmd.weighting;
  cfg.ci_level = cmd.level;
  CellStats st;
  try {
    if (!(cmd.level > 0.0 && cmd.level < 1.0)) throw Error(ErrorKind::InvalidArgument, "--level must lie in (0,1)");
    cfg.identify.points = resolve_points(cmd.points, ds);
    st = cell_stats(ds);
  } catch (const Error& e) {
    return fail(report, e);
  }
  report.doc["dataset"] = cells_json(st, ds);

  diag()["nonsingularity"] = candidates_json(nonsingularity_diag(st, ds.mode), ds.v_support);
  try {
    const auto rel = relevance_test(ds, cmd.flavor);
    Json arr = Json::array();
    for (int z = 0; z < 2; ++z) {
      Json row;
      row["z"] = z;
      row["coef"] = number(rel[z].slope());
      row["robust_se"] = number(rel[z].slope_se());
      row["n"] = number(rel[z].n);
      arr.push_back(row);
    }
    diag()["relevance"] = arr;
  } catch (const Error& e) {
    diag()["relevance"] = e.what();
  }
  try {
    const IdentifyResult id = identify(st, ds.mode, cfg.identify);
    diag()["closed_form"] = {{"ok", true}, {"error", ""}};
    diag()["closed_form"]["result"] = identify_json(id, ds.v_support);
  } catch (const Error& e) {
    diag()["closed_form"] = {{"ok", false}, {"error", e.what()}};
  }

  Estimate est;
  try {
    est = estimate(ds, cfg);
  } catch (const Error& e) {
    return fail(report, e);
  }
  report.doc["estimates"]["gmm"] = estimate_json(est, ds.v_support);

  Json naive;
  try {
    naive["wald_iv"] = regression_json(wald_iv(ds, cmd.flavor));
  } catch (const Error& e) {
    naive["wald_iv"] = e.what();
  }
  try {
    naive["ols_first_stage"] = regression_json(ols(ds, Variable::Treatment, {Variable::Instrument}, cmd.flavor));
    naive["ols_outcome"] = regression_json(ols(ds, Variable::Outcome, {Variable::Treatment}, cmd.flavor));
  } catch (const Error& e) {
    naive["ols_first_stage"] = e.what();
  }
  if (ds.mode == Mode::CaseII) {
    const NaiveBiasReport nb = naive_bias_diag(est, ds);
    naive["bias"] = {{"beta_naive", number(nb.beta_naive)}, {"s_hat", number(nb.s_hat)},
                     {"beta_star", number(nb.beta_star)}, {"implied_naive", number(nb.implied_naive)},
                     {"gap", number(nb.gap)}};
  }
  report.doc["estimates"]["naive"] = naive;

  Json jt;
  jt["stat"] = number(est.j_stat);
  jt["dof"] = est.j_dof;
  jt["pvalue"] = est.j_pvalue ? number(*est.j_pvalue) : Json(nullptr);
  report.doc["j_test"] = jt;

  if (!est.converged) return finish(report, kExitNoConvergence, "GMM did not converge");
  return finish(report, kExitOk, "");
}

CommandResult cmd_identify(const IdentifyCommand& cmd) {
  Json options = schema_json(cmd.data);
  options["points"] = cmd.points;
  Report report = skeleton("identify", options, std::nullopt, cmd.timestamp);

  Dataset ds;
  if (auto early = load_checked(cmd.data, report, ds)) return *early;
  try {
    IdentifyOptions io;
    io.points = resolve_points(cmd.points, ds);
    const CellStats st = cell_stats(ds);
    report.doc["dataset"] = cells_json(st, ds);
    report.doc["diagnostics"]["nonsingularity"] = candidates_json(nonsingularity_diag(st, ds.mode), ds.v_support);
    const IdentifyResult id = identify(st, ds.mode, io);
    report.doc["identify"] = identify_json(id, ds.v_support);
  } catch (const Error& e) {
    return fail(report, e);
  }
  return finish(report, kExitOk, "");
}

CommandResult cmd_simulate(const SimulateCommand& cmd) {
  Json options;
  options["design"] = cmd.design;
  options["n"] = cmd.n;
  options["reps"] = cmd.reps;
  options["seed"] = cmd.seed;
  options["level"] = cmd.level;
  // The thread count does not change the numbers, so it is not echoed.
  Report report = skeleton("simulate", options, cmd.seed, cmd.timestamp);
  try {
    if (cmd.design < 1 || cmd.design > 6) throw Error(ErrorKind::InvalidArgument, "--design must be in 1..6");
    if (cmd.n == 0) throw Error(ErrorKind::InvalidArgument, "--n must be at least 1");
    if (cmd.reps == 0) throw Error(ErrorKind::InvalidArgument, "--reps must be at least 1");
    if (cmd.threads == 0) throw Error(ErrorKind::InvalidArgument, "--threads must be at least 1");
    if (!(cmd.level > 0.0 && cmd.level < 1.0)) throw Error(ErrorKind::InvalidArgument, "--level must lie in (0,1)");
    const DesignSpec d = design(cmd.design);
    StudyConfig cfg;
    cfg.design = cmd.design;
    cfg.n = cmd.n;
    cfg.reps = cmd.reps;
    cfg.seed = cmd.seed;
    cfg.threads = cmd.threads;
    cfg.level = cmd.level;
    const McSummary s = run_study(cfg);
    Json mc = mc_json(s);
    mc["design_spec"] = {{"id", d.id},
                         {"v_role", to_string(d.v_role)},
                         {"outcome", to_string(d.outcome)},
                         {"m_t", d.m_t},
                         {"v_flip", d.v_flip}};
    mc["truth"] = params_json(true_params(d), {"0", "1"});
    report.doc["montecarlo"] = mc;
  } catch (const Error& e) {
    return fail(report, e);
  }
  return finish(report, kExitOk, "");
}

}  // namespace mlate
