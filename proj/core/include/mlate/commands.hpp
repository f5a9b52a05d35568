#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlate/baselines.hpp"
#include "mlate/csv.hpp"
#include "mlate/errors.hpp"
#include "mlate/gmm.hpp"
#include "mlate/report.hpp"

namespace mlate {

enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,              // unreadable input, parse or flag errors
  kExitIdentification = 2,  // data fail validation or identification diagnostics
  kExitNoConvergence = 3,
};

int exit_code_for(ErrorKind kind);

struct DataOptions {
  std::string path;
  CsvSchema schema;
};

struct EstimateCommand {
  DataOptions data;
  Weighting weighting = Weighting::Identity;
  double level = 0.95;
  RobustFlavor flavor = RobustFlavor::HC0;
  std::vector<std::string> points;  // V labels pinning the closed-form start
  bool timestamp = true;
};

struct IdentifyCommand {
  DataOptions data;
  std::vector<std::string> points;
  bool timestamp = true;
};

struct SimulateCommand {
  int design = 1;
  std::size_t n = 1000;
  std::size_t reps = 500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double level = 0.95;
  bool timestamp = true;
};

struct CommandResult {
  Report report;
  int exit_code = kExitOk;
  std::string message;
};

// None of these throw for data or identification problems; the failure is
// described in the report and mapped onto exit_code.
CommandResult cmd_estimate(const EstimateCommand& cmd);
CommandResult cmd_identify(const IdentifyCommand& cmd);
CommandResult cmd_simulate(const SimulateCommand& cmd);

}  // namespace mlate
