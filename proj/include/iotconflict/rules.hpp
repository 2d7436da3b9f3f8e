#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "iotconflict/model.hpp"
#include "iotconflict/selection.hpp"

namespace iotconflict {

/// Leaves of the conflict ontology. Parent categories are derived, see
/// is_individual_service() and friends.
enum class ConflictType {
  Functional,
  ResourceCapacity,
  QualitativeNonFunctional,
  QuantitativeNonFunctional,
  DirectServiceImpact,
  IndirectServiceImpact,
};

inline constexpr std::array<ConflictType, 6> kAllConflictTypes = {
    ConflictType::Functional,
    ConflictType::ResourceCapacity,
    ConflictType::QualitativeNonFunctional,
    ConflictType::QuantitativeNonFunctional,
    ConflictType::DirectServiceImpact,
    ConflictType::IndirectServiceImpact,
};

/// Stable snake_case names used in every file format.
std::string_view to_string(ConflictType type);
/// Accepts the snake_case names plus the short aliases "capacity",
/// "qualitative", "quantitative", "direct", "indirect". ConfigError otherwise.
ConflictType parse_conflict_type(std::string_view text);

bool is_individual_service(ConflictType type);
bool is_non_functional(ConflictType type);
bool is_service_impact(ConflictType type);

struct ConflictRecord {
  ConflictType type = ConflictType::Functional;
  OverlapPair pair;
  std::optional<std::string> attribute;  // set for the two attribute rules
  double weight = 0.0;
  std::string detail;
};

/// Overlap length over the longer of the two durations, in (0, 1].
/// NonOverlapping when the intervals share no positive-length stretch.
double conflict_weight(const TimeInterval& a, const TimeInterval& b);

/// Learned comfort band (median - sigma, median + sigma); both ends open.
struct PreferenceRange {
  std::string user_id;
  std::string service_id;
  std::string attribute;
  double median = 0.0;
  double sigma = 0.0;
  std::size_t sample_count = 0;

  double low() const { return median - sigma; }
  double high() const { return median + sigma; }
  bool contains(double value) const { return value > low() && value < high(); }
};

class PreferenceRanges {
 public:
  using Key = std::tuple<std::string, std::string, std::string>;

  void insert(PreferenceRange range);
  const PreferenceRange* find(std::string_view user, std::string_view service,
                              std::string_view attribute) const;

  std::size_t size() const { return ranges_.size(); }
  bool empty() const { return ranges_.empty(); }
  std::vector<PreferenceRange> to_vector() const;

 private:
  std::map<Key, PreferenceRange> ranges_;
};

/// Median and population standard deviation of every
/// (user, service, quantitative attribute) observed in `training`.
PreferenceRanges learn_ranges(const EventSequence& training);

enum class QuantitativeMode { Ontology, Hybrid };
enum class ImpactStrictness { Paper, Directional };

std::string_view to_string(QuantitativeMode mode);
std::string_view to_string(ImpactStrictness strictness);
QuantitativeMode parse_quantitative_mode(std::string_view text);
ImpactStrictness parse_impact_strictness(std::string_view text);

/// Same service, one event On and the other Off.
std::optional<ConflictRecord> eval_functional(const OverlapPair& pair);

/// Same service with bounded capacity and combined demand above it.
std::optional<ConflictRecord> eval_capacity(const OverlapPair& pair,
                                            const ServiceDescriptor& service);

/// Same service and a nominal attribute present on both events with
/// different values. The first differing attribute in schema order is
/// reported.
std::optional<ConflictRecord> eval_qualitative(const OverlapPair& pair,
                                               const ServiceDescriptor& service);

/// Numeric counterpart of eval_qualitative.
///
/// Ontology mode flags any difference. Hybrid mode flags the pair when the
/// first event's value is outside the second user's learned range or the
/// second event's value is outside the first user's; a side with no learned
/// range falls back to the strict inequality.
std::optional<ConflictRecord> eval_quantitative(
    const OverlapPair& pair, const ServiceDescriptor& service,
    const PreferenceRanges& ranges, QuantitativeMode mode);

/// Different services linked by a dependency, both On.
std::optional<ConflictRecord> eval_direct_impact(
    const OverlapPair& pair, const ServiceRegistry& registry);

/// Different services without a dependency, both On, acting on a common
/// environment property. Directional strictness additionally requires one to
/// raise and the other to lower that property.
std::optional<ConflictRecord> eval_indirect_impact(
    const OverlapPair& pair, const ServiceRegistry& registry,
    ImpactStrictness strictness);

/// Which rules run and how the two configurable ones behave.
struct RuleConfig {
  std::array<bool, 6> enabled = {true, true, true, true, true, true};
  QuantitativeMode quantitative_mode = QuantitativeMode::Hybrid;
  ImpactStrictness indirect_strictness = ImpactStrictness::Directional;

  bool is_enabled(ConflictType type) const {
    return enabled[static_cast<std::size_t>(type)];
  }
  void set_enabled(ConflictType type, bool on) {
    enabled[static_cast<std::size_t>(type)] = on;
  }
  bool any_enabled() const;
};

/// JSON: {"rules": {"functional": true, ...}, "quantitative_mode": "hybrid",
/// "indirect_strictness": "directional"}. Omitted keys keep their defaults.
RuleConfig parse_rule_config(std::istream& in);

}  // namespace iotconflict
