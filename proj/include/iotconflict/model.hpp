#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "iotconflict/error.hpp"

namespace iotconflict {

using Duration = std::chrono::microseconds;
using Timestamp = std::chrono::sys_time<Duration>;

/// Half-open time range [start, end). Intervals that only share an endpoint
/// do not overlap.
struct TimeInterval {
  Timestamp start{};
  Timestamp end{};

  Duration length() const { return end - start; }
  bool empty() const { return end <= start; }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
  friend auto operator<=>(const TimeInterval&, const TimeInterval&) = default;
};

/// Throws InvertedInterval when start > end.
TimeInterval make_interval(Timestamp start, Timestamp end);

/// Length of the intersection, zero when disjoint.
Duration intersection_length(const TimeInterval& a, const TimeInterval& b);
std::optional<TimeInterval> intersection(const TimeInterval& a,
                                         const TimeInterval& b);
inline bool overlaps(const TimeInterval& a, const TimeInterval& b) {
  return intersection_length(a, b) > Duration::zero();
}

enum class ServiceState { On, Off };

std::string_view to_string(ServiceState state);
ServiceState parse_state(std::string_view text);

/// Service capacity; an empty limit means the service can serve any number of
/// users at once (a shared TV, for instance).
struct Capacity {
  std::optional<std::uint32_t> limit;

  static Capacity unbounded() { return {}; }
  static Capacity bounded(std::uint32_t n) { return {n}; }
  bool is_bounded() const { return limit.has_value(); }

  friend bool operator==(const Capacity&, const Capacity&) = default;
};

enum class EnvDirection { Raises, Lowers, Neutral };

std::string_view to_string(EnvDirection direction);
EnvDirection parse_env_direction(std::string_view text);

struct EnvEffect {
  std::string property;
  EnvDirection direction = EnvDirection::Neutral;

  friend bool operator==(const EnvEffect&, const EnvEffect&) = default;
};

/// Nominal attribute. An empty `allowed` list accepts any value.
struct QualitativeAttribute {
  std::string name;
  std::vector<std::string> allowed;
};

struct QuantitativeAttribute {
  std::string name;
  std::string unit;
  std::optional<double> min;
  std::optional<double> max;
};

struct ServiceDescriptor {
  std::string service_id;
  std::string name;
  std::vector<std::string> functions;  // informational only
  Capacity capacity;
  std::vector<QualitativeAttribute> qualitative_attrs;
  std::vector<QuantitativeAttribute> quantitative_attrs;
  std::set<std::string> depends_on;
  std::vector<EnvEffect> env_effects;

  const QualitativeAttribute* find_qualitative(std::string_view attr) const;
  const QuantitativeAttribute* find_quantitative(std::string_view attr) const;
};

/// Checks descriptor invariants: non-empty id, disjoint attribute partitions,
/// no self-dependency.
void validate_descriptor(const ServiceDescriptor& descriptor);

class ServiceRegistry {
 public:
  using Map = std::map<std::string, ServiceDescriptor, std::less<>>;

  ServiceRegistry() = default;

  /// Validates and inserts; a duplicate service_id is an InvalidArgument.
  void add(ServiceDescriptor descriptor);

  const ServiceDescriptor* find(std::string_view service_id) const;
  /// Throws UnknownService.
  const ServiceDescriptor& at(std::string_view service_id) const;
  bool contains(std::string_view service_id) const {
    return find(service_id) != nullptr;
  }

  /// True when either service declares a dependency on the other.
  bool has_dependency(std::string_view a, std::string_view b) const;

  std::size_t size() const { return services_.size(); }
  bool empty() const { return services_.empty(); }
  Map::const_iterator begin() const { return services_.begin(); }
  Map::const_iterator end() const { return services_.end(); }

 private:
  Map services_;
};

struct ServiceEvent {
  std::string event_id;
  std::string service_id;
  ServiceState state = ServiceState::On;
  TimeInterval interval;
  std::string location;
  std::string user_id;
  std::map<std::string, std::string> qualitative_values;
  std::map<std::string, double> quantitative_values;
  std::uint32_t capacity_demand = 1;

  friend bool operator==(const ServiceEvent&, const ServiceEvent&) = default;
};

/// Orders by interval start, then event_id.
bool event_before(const ServiceEvent& a, const ServiceEvent& b);

/// Immutable list of events sorted by (interval.start, event_id).
class EventSequence {
 public:
  EventSequence() = default;
  explicit EventSequence(std::vector<ServiceEvent> events);

  const std::vector<ServiceEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const ServiceEvent& operator[](std::size_t i) const { return events_[i]; }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }

  /// Services that appear in at least one event.
  std::set<std::string> service_ids() const;
  std::set<std::string> user_ids() const;

  friend bool operator==(const EventSequence&, const EventSequence&) = default;

 private:
  std::vector<ServiceEvent> events_;
};

/// Merges several sequences into one; throws InvalidArgument on duplicate
/// event ids.
EventSequence merge_sequences(const std::vector<EventSequence>& parts);

/// Trim, case-fold and collapse internal whitespace. Throws InvalidLocation
/// when nothing is left.
std::string canonicalize_location(std::string_view raw);

/// Returns the event unchanged when all invariants hold against `registry`.
ServiceEvent validate_event(const ServiceEvent& event,
                            const ServiceRegistry& registry);

}  // namespace iotconflict
