#pragma once

// Run configuration and the command implementations behind the `oqnet` tool.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oqnet/coupling_opt.hpp"
#include "oqnet/errors.hpp"
#include "oqnet/memmetrics.hpp"
#include "oqnet/netmodel.hpp"

namespace oqnet::cli {

/// Malformed JSON (exit code 4).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Files that cannot be read or written (exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Schema violations and dimension mismatches (exit code 2).
class ConfigError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

struct FSelection {
  enum class Kind { matrix, all, select, isolating };
  Kind kind = Kind::all;
  bool given = false;  // false when the task leaves F out
  Mat matrix;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> select;  // node id, variable indices
  std::size_t isolating_rows = 0;
};

struct SolverOptions {
  GramianMethod gramian = GramianMethod::vanloan;
  double t_max = 0.0;  // <= 0: default horizon
  std::size_t grid_points = 200;
  double t_end = 0.0;  // <= 0: default curve length
  OptimizerMethod optimizer = OptimizerMethod::global;
  OptimizerMode mode = OptimizerMode::standard;
  double fixed_point_tol = 1e-10;
  std::size_t max_sweeps = 500;
};

struct RunConfig {
  NetworkSpec network;
  FSelection f;
  std::optional<Mat> p;  // unset: vacuum
  std::vector<double> epsilons{0.01};
  SolverOptions solver;
  std::string output_dir;
  nlohmann::ordered_json document;  // the parsed input, kept for re-emission
};

RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::filesystem::path& path);

Mat resolve_f(const RunConfig& config, const AugmentedModel& model);
MemoryTask make_task(const RunConfig& config, const AugmentedModel& model);

nlohmann::ordered_json matrix_to_json(const Mat& m);

/// Serializes a spec in the config schema (edges oriented in node order).
nlohmann::ordered_json network_to_json(const NetworkSpec& spec);

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;
  bool timestamp = true;
  std::optional<std::vector<double>> epsilons;
  std::optional<GramianMethod> method;
  std::optional<OptimizerMethod> optimizer;
  std::optional<OptimizerMode> mode;
};

enum ExitCode : int { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

/// Runs one command and maps errors to exit codes; messages go to `err`.
int run(const std::string& command, const std::filesystem::path& config_path,
        const CommandOptions& options, std::ostream& out, std::ostream& err);

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"validate", "assemble",  "simulate",
                                              "decoherence", "optimize", "isolate"};
  return names;
}

std::vector<double> parse_epsilon_list(const std::string& text);

}  // namespace oqnet::cli
