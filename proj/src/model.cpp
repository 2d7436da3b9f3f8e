#include "iotconflict/model.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "iotconflict/timestamp.hpp"

namespace iotconflict {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidLocation: return "InvalidLocation";
    case ErrorCode::UnknownService: return "UnknownService";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::InvalidAttributeValue: return "InvalidAttributeValue";
    case ErrorCode::InvertedInterval: return "InvertedInterval";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnmappedSensor: return "UnmappedSensor";
    case ErrorCode::NonOverlapping: return "NonOverlapping";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownPair: return "UnknownPair";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

TimeInterval make_interval(Timestamp start, Timestamp end) {
  if (start > end) {
    throw Error(ErrorCode::InvertedInterval,
                format_timestamp(start) + " > " + format_timestamp(end));
  }
  return {start, end};
}

Duration intersection_length(const TimeInterval& a, const TimeInterval& b) {
  auto lo = std::max(a.start, b.start);
  auto hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : Duration::zero();
}

std::optional<TimeInterval> intersection(const TimeInterval& a,
                                         const TimeInterval& b) {
  auto lo = std::max(a.start, b.start);
  auto hi = std::min(a.end, b.end);
  if (hi <= lo) return std::nullopt;
  return TimeInterval{lo, hi};
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

std::string_view to_string(ServiceState state) {
  return state == ServiceState::On ? "On" : "Off";
}

ServiceState parse_state(std::string_view text) {
  auto s = lower(text);
  if (s == "on") return ServiceState::On;
  if (s == "off") return ServiceState::Off;
  throw Error(ErrorCode::MalformedLine,
              "unknown service state '" + std::string(text) + "'");
}

std::string_view to_string(EnvDirection direction) {
  switch (direction) {
    case EnvDirection::Raises: return "raises";
    case EnvDirection::Lowers: return "lowers";
    case EnvDirection::Neutral: return "neutral";
  }
  return "neutral";
}

EnvDirection parse_env_direction(std::string_view text) {
  auto s = lower(text);
  if (s == "raises") return EnvDirection::Raises;
  if (s == "lowers") return EnvDirection::Lowers;
  if (s == "neutral") return EnvDirection::Neutral;
  throw Error(ErrorCode::InvalidArgument,
              "unknown environment direction '" + std::string(text) + "'");
}

const QualitativeAttribute* ServiceDescriptor::find_qualitative(
    std::string_view attr) const {
  for (const auto& a : qualitative_attrs) {
    if (a.name == attr) return &a;
  }
  return nullptr;
}

const QuantitativeAttribute* ServiceDescriptor::find_quantitative(
    std::string_view attr) const {
  for (const auto& a : quantitative_attrs) {
    if (a.name == attr) return &a;
  }
  return nullptr;
}

void validate_descriptor(const ServiceDescriptor& d) {
  if (d.service_id.empty()) {
    throw Error(ErrorCode::InvalidArgument, "service_id must not be empty");
  }
  std::unordered_set<std::string> names;
  for (const auto& a : d.qualitative_attrs) {
    if (!names.insert(a.name).second) {
      throw Error(ErrorCode::InvalidArgument,
                  d.service_id + ": attribute '" + a.name + "' declared twice");
    }
  }
  for (const auto& a : d.quantitative_attrs) {
    if (!names.insert(a.name).second) {
      throw Error(ErrorCode::InvalidArgument,
                  d.service_id + ": attribute '" + a.name +
                      "' is both qualitative and quantitative");
    }
    if (a.min && a.max && *a.min > *a.max) {
      throw Error(ErrorCode::InvalidArgument,
                  d.service_id + ": empty domain for '" + a.name + "'");
    }
  }
  if (d.depends_on.count(d.service_id)) {
    throw Error(ErrorCode::InvalidArgument,
                d.service_id + ": service cannot depend on itself");
  }
}

void ServiceRegistry::add(ServiceDescriptor descriptor) {
  validate_descriptor(descriptor);
  auto id = descriptor.service_id;
  if (!services_.emplace(id, std::move(descriptor)).second) {
    throw Error(ErrorCode::InvalidArgument, "duplicate service_id " + id);
  }
}

const ServiceDescriptor* ServiceRegistry::find(std::string_view id) const {
  auto it = services_.find(id);
  return it == services_.end() ? nullptr : &it->second;
}

const ServiceDescriptor& ServiceRegistry::at(std::string_view id) const {
  if (const auto* d = find(id)) return *d;
  throw Error(ErrorCode::UnknownService, std::string(id));
}

bool ServiceRegistry::has_dependency(std::string_view a,
                                     std::string_view b) const {
  const auto* da = find(a);
  const auto* db = find(b);
  auto depends = [](const ServiceDescriptor* d, std::string_view other) {
    return d && d->depends_on.count(std::string(other)) > 0;
  };
  return depends(da, b) || depends(db, a);
}

bool event_before(const ServiceEvent& a, const ServiceEvent& b) {
  if (a.interval.start != b.interval.start) {
    return a.interval.start < b.interval.start;
  }
  return a.event_id < b.event_id;
}

EventSequence::EventSequence(std::vector<ServiceEvent> events)
    : events_(std::move(events)) {
  // Stable so that duplicate ids (which callers should avoid) still order
  // deterministically.
  std::stable_sort(events_.begin(), events_.end(), event_before);
}

std::set<std::string> EventSequence::service_ids() const {
  std::set<std::string> out;
  for (const auto& e : events_) out.insert(e.service_id);
  return out;
}

std::set<std::string> EventSequence::user_ids() const {
  std::set<std::string> out;
  for (const auto& e : events_) out.insert(e.user_id);
  return out;
}

EventSequence merge_sequences(const std::vector<EventSequence>& parts) {
  std::vector<ServiceEvent> all;
  std::unordered_set<std::string> ids;
  for (const auto& part : parts) {
    for (const auto& e : part) {
      if (!ids.insert(e.event_id).second) {
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate event_id " + e.event_id);
      }
      all.push_back(e);
    }
  }
  return EventSequence(std::move(all));
}

std::string canonicalize_location(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  if (out.empty()) {
    throw Error(ErrorCode::InvalidLocation, "location is empty");
  }
  return out;
}

ServiceEvent validate_event(const ServiceEvent& ev,
                            const ServiceRegistry& registry) {
  const auto* d = registry.find(ev.service_id);
  if (!d) {
    throw Error(ErrorCode::UnknownService,
                ev.service_id + " (event " + ev.event_id + ")");
  }
  if (ev.interval.start > ev.interval.end) {
    throw Error(ErrorCode::InvertedInterval, "event " + ev.event_id);
  }
  if (ev.event_id.empty()) {
    throw Error(ErrorCode::InvalidArgument, "event_id must not be empty");
  }
  if (ev.user_id.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "event " + ev.event_id + " has no user_id");
  }
  if (ev.capacity_demand < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "event " + ev.event_id + ": capacity_demand must be >= 1");
  }
  if (ev.location != canonicalize_location(ev.location)) {
    throw Error(ErrorCode::InvalidLocation,
                "event " + ev.event_id + ": location '" + ev.location +
                    "' is not canonical");
  }
  for (const auto& [name, value] : ev.qualitative_values) {
    const auto* attr = d->find_qualitative(name);
    if (!attr) {
      throw Error(ErrorCode::UnknownAttribute,
                  ev.service_id + " has no nominal attribute '" + name + "'");
    }
    if (!attr->allowed.empty() &&
        std::find(attr->allowed.begin(), attr->allowed.end(), value) ==
            attr->allowed.end()) {
      throw Error(ErrorCode::InvalidAttributeValue,
                  name + "='" + value + "' on " + ev.service_id);
    }
  }
  for (const auto& [name, value] : ev.quantitative_values) {
    const auto* attr = d->find_quantitative(name);
    if (!attr) {
      throw Error(ErrorCode::UnknownAttribute,
                  ev.service_id + " has no numeric attribute '" + name + "'");
    }
    if ((attr->min && value < *attr->min) ||
        (attr->max && value > *attr->max)) {
      throw Error(ErrorCode::InvalidAttributeValue,
                  name + "=" + std::to_string(value) + " outside domain of " +
                      ev.service_id);
    }
  }
  return ev;
}

}  // namespace iotconflict
