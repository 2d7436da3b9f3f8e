#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "iotconflict/detector.hpp"
#include "iotconflict/model.hpp"
#include "iotconflict/rules.hpp"

namespace iotconflict {

/// One component of a preference mixture; values are drawn from a normal
/// distribution truncated to mean +/- 2 * spread.
struct MixtureComponent {
  double weight = 1.0;
  double mean = 0.0;
  double spread = 0.0;
};

struct QuantitativePreference {
  std::vector<MixtureComponent> components;
  double step = 0.0;  // round drawn values to this grid when > 0
};

/// A daily routine: with `probability`, the resident uses the service around
/// `start_hour` (+/- jitter) for `duration_minutes`.
struct Habit {
  std::string service_id;
  std::string location;
  double start_hour = 0.0;
  double duration_minutes = 60.0;
  double jitter_minutes = 0.0;
  double probability = 1.0;
  ServiceState state = ServiceState::On;
  std::uint32_t capacity_demand = 1;
  std::map<std::string, QuantitativePreference> quantitative;
  std::map<std::string, std::vector<std::string>> qualitative;  // uniform pick
};

struct ResidentProfile {
  std::string user_id;
  std::vector<Habit> habits;
};

struct ScenarioSpec {
  std::uint64_t seed = 0;
  int days = 1;
  Timestamp start_day = Timestamp{std::chrono::sys_days{
      std::chrono::year{2018} / std::chrono::June / 15}};
  std::vector<ResidentProfile> residents;
  ServiceRegistry services;
  /// Injected conflicts per day; fractional rates accumulate across days.
  std::map<ConflictType, double> injection_rates;
  std::string injection_location = "living room";
  double injection_start_hour = 1.0;
  std::string label_attribute = "temperature";
  double comfort_threshold = kDefaultComfortThreshold;
};

/// JSON scenario file. "services" uses the registry schema.
ScenarioSpec parse_scenario_spec(std::istream& in);
ScenarioSpec load_scenario_spec(const std::filesystem::path& path);

struct SyntheticCorpus {
  EventSequence events;
  std::vector<GroundTruthLabel> labels;  // one per candidate overlap pair
  std::map<ConflictType, std::size_t> injected;
};

/// Deterministic for a fixed spec. Injected conflicts occupy their own
/// 12-minute slots from `injection_start_hour`; every cross-user overlap pair
/// is labelled, injected ones with their type and the rest by the comfort
/// rule on `label_attribute` (non-conflict when the attribute is absent).
/// InfeasibleSpec when a requested conflict type cannot be built from the
/// registry or the residents.
SyntheticCorpus generate(const ScenarioSpec& spec);

/// Writes the corpus in the enriched format chosen by the file extension and
/// the labels file. IoFailure on any write error.
void replay_to_enriched(const EventSequence& seq,
                        const std::vector<GroundTruthLabel>& labels,
                        const std::filesystem::path& corpus_path,
                        const std::filesystem::path& labels_path);

}  // namespace iotconflict
