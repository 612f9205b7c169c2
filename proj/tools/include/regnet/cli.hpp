#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "regnet/episodes.hpp"
#include "regnet/error.hpp"
#include "regnet/experiments.hpp"

namespace regnet::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kIo = 3,
  kDivergence = 4,
  kFailure = 5,
};

class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string command;  // train | eval | ablate | shift | check | help
  std::string help_text;

  std::string dataset = "synth";  // "synth" or a CSV path
  SynthSpec synth;
  // shift: "translated" (the training dataset with every feature moved by
  // shift_offset) or a CSV path.
  std::string test_dataset = "translated";
  double shift_offset = 1.0;

  ExperimentConfig experiment;
  std::vector<double> lambda2_values = {0.0, 1e-2};

  std::filesystem::path out;
  std::filesystem::path checkpoint;
};

// Merges defaults <- `--config` file <- command-line flags. Throws UsageError
// naming the offending flag or key. `--help` yields command "help".
RunConfig parse_args(int argc, const char* const* argv);
RunConfig parse_args(const std::vector<std::string>& args);

int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// parse_args + run with every error mapped onto an exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace regnet::cli
