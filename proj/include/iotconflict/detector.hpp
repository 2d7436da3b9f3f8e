#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "iotconflict/model.hpp"
#include "iotconflict/rules.hpp"
#include "iotconflict/selection.hpp"

namespace iotconflict {

struct DetectionResult {
  std::vector<ConflictRecord> conflicts;
  std::map<ConflictType, std::size_t> counts_by_type;
  /// Unordered service pairs, stored as (smaller id, larger id).
  std::map<ConflictType, std::set<std::pair<std::string, std::string>>>
      conflicting_services;

  std::size_t count(ConflictType type) const;
  std::size_t total() const { return conflicts.size(); }
};

/// Record order: (location, overlap.start, type, first.event_id,
/// second.event_id).
bool record_before(const ConflictRecord& a, const ConflictRecord& b);

/// Runs every enabled rule on every pair and keeps each match as its own
/// record. ConfigError when no rule is enabled.
DetectionResult detect(const std::vector<OverlapPair>& pairs,
                       const RuleConfig& config,
                       const PreferenceRanges& ranges,
                       const ServiceRegistry& registry);

/// One JSON object per conflict followed by a summary object.
void write_detection(std::ostream& out, const DetectionResult& result);

struct GroundTruthLabel {
  std::string first_event;
  std::string second_event;
  bool is_conflict = false;
  std::optional<ConflictType> type;

  friend bool operator==(const GroundTruthLabel&,
                         const GroundTruthLabel&) = default;
};

/// Delimited text `event_id_1,event_id_2,is_conflict[,type]`; a leading
/// header row is optional on input and always written on output.
std::vector<GroundTruthLabel> read_labels(std::istream& in);
void write_labels(std::ostream& out, const std::vector<GroundTruthLabel>& labels);
std::vector<GroundTruthLabel> load_labels(const std::filesystem::path& path);

struct EvaluationReport {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;

  std::size_t total() const {
    return true_positives + false_positives + true_negatives + false_negatives;
  }
};

/// Fills the derived metrics from the four counts. Zero denominators give 0.
EvaluationReport make_report(std::size_t tp, std::size_t fp, std::size_t tn,
                             std::size_t fn);

/// Confusion matrix over the labelled pairs. With a scope, only labels that
/// are untyped or of that type are judged, and only records of that type
/// count as predictions. UnknownPair when a label names an event that is not
/// in `universe`.
EvaluationReport evaluate(const DetectionResult& result,
                          const std::vector<GroundTruthLabel>& labels,
                          const EventSequence& universe,
                          std::optional<ConflictType> scope = std::nullopt);

void write_evaluation(std::ostream& out, const EvaluationReport& report);

inline constexpr double kDefaultComfortThreshold = 3.0;

/// Conflict iff |a - b| > threshold for `attribute`; positives are typed
/// quantitative. MissingAttribute when an event lacks the attribute.
std::vector<GroundTruthLabel> label_by_comfort_rule(
    const std::vector<OverlapPair>& pairs, const std::string& attribute,
    double threshold = kDefaultComfortThreshold);

/// Splits each user's events chronologically: the first
/// floor(fraction * n) go to training, the rest to detection.
std::pair<EventSequence, EventSequence> chronological_split(
    const EventSequence& seq, double train_fraction);

struct PipelineOptions {
  std::size_t k = kDefaultTopK;
  bool all_services = false;  // skip the top-k heuristic
  RuleConfig rules;
  double train_fraction = 0.8;
  Duration min_overlap = Duration::zero();
};

struct PipelineOutput {
  EventSequence training;
  EventSequence detection;
  PreferenceRanges ranges;
  std::vector<UsageStats> ranking;
  std::set<std::string> selected;
  std::vector<OverlapPair> pairs;
  DetectionResult result;
};

/// Split, learn ranges on the training part, rank on the full history,
/// select, find overlaps in the detection part and run the rules.
PipelineOutput run_pipeline(const EventSequence& seq,
                            const ServiceRegistry& registry,
                            const PipelineOptions& options);

}  // namespace iotconflict
