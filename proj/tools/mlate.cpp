#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlate/commands.hpp"

namespace {

struct OutputFlags {
  bool text = false;
  bool json = false;
  bool no_timestamp = false;
};

struct DataFlags {
  std::string path;
  std::string outcome = "y";
  std::string treatment = "t";
  std::string instrument = "z";
  std::string exogenous = "v";
  std::string mode = "case-ii";
  std::string delimiter = ",";
  bool no_header = false;
  std::vector<std::string> v_order;
  std::vector<std::string> points;
};

void add_data_flags(CLI::App* app, DataFlags& f) {
  app->add_option("--data", f.path, "CSV file")->required();
  app->add_option("--outcome", f.outcome, "outcome column (Y)");
  app->add_option("--treatment", f.treatment, "observed treatment column (T, 0/1)");
  app->add_option("--instrument", f.instrument, "binary instrument column (Z, 0/1)");
  app->add_option("--exogenous", f.exogenous, "exogenous variable column (V)");
  app->add_option("--mode", f.mode, "case-i or case-ii")->check(CLI::IsMember({"case-i", "case-ii", "i", "ii"}));
  app->add_option("--delimiter", f.delimiter, "field delimiter");
  app->add_flag("--no-header", f.no_header, "columns are zero-based indices; no header row");
  app->add_option("--v-order", f.v_order, "support order of V (comma separated)")->delimiter(',');
  app->add_option("--points", f.points, "V labels pinning the closed-form support points")->delimiter(',');
}

void add_output_flags(CLI::App* app, OutputFlags& f) {
  auto* json = app->add_flag("--json", f.json, "JSON report (default)");
  app->add_flag("--text", f.text, "plain-text report")->excludes(json);
  app->add_flag("--no-timestamp", f.no_timestamp, "omit the wall-clock timestamp");
}

mlate::DataOptions data_options(const DataFlags& f) {
  if (f.delimiter.size() != 1) throw mlate::Error(mlate::ErrorKind::InvalidArgument, "--delimiter must be one character");
  mlate::DataOptions d;
  d.path = f.path;
  d.schema.outcome = f.outcome;
  d.schema.treatment = f.treatment;
  d.schema.instrument = f.instrument;
  d.schema.exogenous = f.exogenous;
  d.schema.mode = mlate::parse_mode(f.mode);
  d.schema.delimiter = f.delimiter[0];
  d.schema.header = !f.no_header;
  d.schema.v_order = f.v_order;
  return d;
}

int emit(const mlate::CommandResult& r, const OutputFlags& out) {
  std::cout << (out.text ? r.report.to_text() : r.report.to_json());
  if (r.exit_code != mlate::kExitOk) std::cerr << "mlate: " << r.message << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LATE estimation under a misclassified binary treatment"};
  app.set_version_flag("--version", mlate::software_version());
  app.require_subcommand(1);

  OutputFlags out;
  DataFlags est_data;
  std::string weight = "identity";
  double level = 0.95;
  bool hc1 = false;
  auto* est = app.add_subcommand("estimate", "GMM estimate with diagnostics and naive baselines");
  add_data_flags(est, est_data);
  add_output_flags(est, out);
  est->add_option("--weight", weight, "identity or optimal")->check(CLI::IsMember({"identity", "optimal"}));
  est->add_option("--level", level, "confidence level");
  est->add_flag("--hc1", hc1, "HC1 instead of HC0 robust standard errors in the baselines");

  DataFlags id_data;
  auto* idc = app.add_subcommand("identify", "closed-form identification only");
  add_data_flags(idc, id_data);
  add_output_flags(idc, out);

  mlate::SimulateCommand sim;
  auto* simc = app.add_subcommand("simulate", "Monte Carlo study for one design");
  simc->add_option("--design", sim.design, "design 1..6")->required();
  simc->add_option("--n", sim.n, "sample size");
  simc->add_option("--reps", sim.reps, "replications");
  simc->add_option("--seed", sim.seed, "seed");
  simc->add_option("--threads", sim.threads, "worker threads");
  simc->add_option("--level", sim.level, "confidence level");
  add_output_flags(simc, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mlate::kExitIo;
  }

  try {
    if (est->parsed()) {
      mlate::EstimateCommand cmd;
      cmd.data = data_options(est_data);
      cmd.weighting = mlate::parse_weighting(weight);
      cmd.level = level;
      cmd.flavor = hc1 ? mlate::RobustFlavor::HC1 : mlate::RobustFlavor::HC0;
      cmd.points = est_data.points;
      cmd.timestamp = !out.no_timestamp;
      return emit(mlate::cmd_estimate(cmd), out);
    }
    if (idc->parsed()) {
      mlate::IdentifyCommand cmd;
      cmd.data = data_options(id_data);
      cmd.points = id_data.points;
      cmd.timestamp = !out.no_timestamp;
      return emit(mlate::cmd_identify(cmd), out);
    }
    sim.timestamp = !out.no_timestamp;
    return emit(mlate::cmd_simulate(sim), out);
  } catch (const mlate::Error& e) {
    std::cerr << "mlate: " << e.what() << '\n';
    return mlate::exit_code_for(e.kind());
  }
}
