#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "iotconflict/rules.hpp"

namespace iotconflict::cli {

enum class Command { Ingest, Detect, Metrics, Synth, Rank };

enum ExitCode : int { kOk = 0, kValidationError = 1, kIoError = 2 };

inline constexpr const char* kRegistryEnv = "IOTCONFLICT_REGISTRY";

struct RunConfig {
  Command command = Command::Detect;
  std::vector<std::string> inputs;
  std::vector<std::string> users;  // ingest: one per input, defaults to stem
  std::string registry_path;
  std::string sensor_map_path;
  std::string rules_path;
  std::string labels_path;
  std::string spec_path;
  std::string output_path;  // empty: stdout
  std::string report_path;
  std::string registry_out_path;
  std::size_t k = 7;
  bool oracle = false;
  QuantitativeMode mode = QuantitativeMode::Hybrid;
  ImpactStrictness strictness = ImpactStrictness::Directional;
  double train_fraction = 0.8;
  double comfort_threshold = 3.0;
  double min_overlap_seconds = 0.0;
  std::string attribute = "temperature";
  std::optional<ConflictType> scope;
  std::optional<std::uint64_t> seed;
};

/// Parses `args` (without the program name) and runs the command. Returns
/// 0 on success, 1 on usage or validation errors, 2 on I/O errors.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace iotconflict::cli
