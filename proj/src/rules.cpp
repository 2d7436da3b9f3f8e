#include "iotconflict/rules.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <sstream>

#include <json.hpp>

namespace iotconflict {

std::string_view to_string(ConflictType type) {
  switch (type) {
    case ConflictType::Functional: return "functional";
    case ConflictType::ResourceCapacity: return "resource_capacity";
    case ConflictType::QualitativeNonFunctional:
      return "qualitative_nonfunctional";
    case ConflictType::QuantitativeNonFunctional:
      return "quantitative_nonfunctional";
    case ConflictType::DirectServiceImpact: return "direct_service_impact";
    case ConflictType::IndirectServiceImpact: return "indirect_service_impact";
  }
  return "functional";
}

ConflictType parse_conflict_type(std::string_view text) {
  std::string s(text);
  for (auto& c : s) c = static_cast<char>(std::tolower(c));
  for (auto t : kAllConflictTypes) {
    if (s == to_string(t)) return t;
  }
  if (s == "capacity") return ConflictType::ResourceCapacity;
  if (s == "qualitative") return ConflictType::QualitativeNonFunctional;
  if (s == "quantitative") return ConflictType::QuantitativeNonFunctional;
  if (s == "direct") return ConflictType::DirectServiceImpact;
  if (s == "indirect") return ConflictType::IndirectServiceImpact;
  throw Error(ErrorCode::ConfigError,
              "unknown conflict type '" + std::string(text) + "'");
}

bool is_individual_service(ConflictType type) {
  return !is_service_impact(type);
}

bool is_non_functional(ConflictType type) {
  return type == ConflictType::ResourceCapacity ||
         type == ConflictType::QualitativeNonFunctional ||
         type == ConflictType::QuantitativeNonFunctional;
}

bool is_service_impact(ConflictType type) {
  return type == ConflictType::DirectServiceImpact ||
         type == ConflictType::IndirectServiceImpact;
}

double conflict_weight(const TimeInterval& a, const TimeInterval& b) {
  auto shared = intersection_length(a, b);
  if (shared <= Duration::zero()) {
    throw Error(ErrorCode::NonOverlapping, "intervals do not intersect");
  }
  auto longest = std::max(a.length(), b.length());
  return static_cast<double>(shared.count()) /
         static_cast<double>(longest.count());
}

void PreferenceRanges::insert(PreferenceRange range) {
  Key key{range.user_id, range.service_id, range.attribute};
  ranges_.insert_or_assign(std::move(key), std::move(range));
}

const PreferenceRange* PreferenceRanges::find(std::string_view user,
                                              std::string_view service,
                                              std::string_view attribute) const {
  auto it = ranges_.find(
      Key{std::string(user), std::string(service), std::string(attribute)});
  return it == ranges_.end() ? nullptr : &it->second;
}

std::vector<PreferenceRange> PreferenceRanges::to_vector() const {
  std::vector<PreferenceRange> out;
  out.reserve(ranges_.size());
  for (const auto& [key, r] : ranges_) out.push_back(r);
  return out;
}

PreferenceRanges learn_ranges(const EventSequence& training) {
  std::map<PreferenceRanges::Key, std::vector<double>> samples;
  for (const auto& ev : training) {
    for (const auto& [attr, value] : ev.quantitative_values) {
      samples[{ev.user_id, ev.service_id, attr}].push_back(value);
    }
  }

  PreferenceRanges out;
  for (auto& [key, values] : samples) {
    const auto n = values.size();
    std::sort(values.begin(), values.end());
    double median = n % 2 == 1
                        ? values[n / 2]
                        : values[n / 2 - 1] + (values[n / 2] - values[n / 2 - 1]) / 2;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);

    PreferenceRange r;
    std::tie(r.user_id, r.service_id, r.attribute) = key;
    r.median = median;
    r.sigma = std::sqrt(ss / static_cast<double>(n));
    r.sample_count = n;
    out.insert(std::move(r));
  }
  return out;
}

std::string_view to_string(QuantitativeMode mode) {
  return mode == QuantitativeMode::Hybrid ? "hybrid" : "ontology";
}

std::string_view to_string(ImpactStrictness strictness) {
  return strictness == ImpactStrictness::Paper ? "paper" : "directional";
}

QuantitativeMode parse_quantitative_mode(std::string_view text) {
  if (text == "hybrid") return QuantitativeMode::Hybrid;
  if (text == "ontology") return QuantitativeMode::Ontology;
  throw Error(ErrorCode::ConfigError,
              "mode must be ontology or hybrid, got '" + std::string(text) +
                  "'");
}

ImpactStrictness parse_impact_strictness(std::string_view text) {
  if (text == "paper") return ImpactStrictness::Paper;
  if (text == "directional") return ImpactStrictness::Directional;
  throw Error(ErrorCode::ConfigError,
              "strictness must be paper or directional, got '" +
                  std::string(text) + "'");
}

namespace {

ConflictRecord make_record(ConflictType type, const OverlapPair& pair,
                           std::optional<std::string> attribute,
                           std::string detail) {
  ConflictRecord r;
  r.type = type;
  r.pair = pair;
  r.attribute = std::move(attribute);
  r.weight = conflict_weight(pair.first.interval, pair.second.interval);
  r.detail = std::move(detail);
  return r;
}

std::string who(const ServiceEvent& ev) {
  return ev.service_id + "/" + ev.user_id;
}

std::string number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::optional<ConflictRecord> eval_functional(const OverlapPair& pair) {
  if (!pair.same_service() || pair.first.state == pair.second.state) {
    return std::nullopt;
  }
  return make_record(ConflictType::Functional, pair, std::nullopt,
                     pair.first.service_id + ": " + pair.first.user_id +
                         " wants " + std::string(to_string(pair.first.state)) +
                         ", " + pair.second.user_id + " wants " +
                         std::string(to_string(pair.second.state)));
}

std::optional<ConflictRecord> eval_capacity(const OverlapPair& pair,
                                            const ServiceDescriptor& service) {
  if (!pair.same_service() || !service.capacity.is_bounded()) {
    return std::nullopt;
  }
  const auto demand = static_cast<std::uint64_t>(pair.first.capacity_demand) +
                      pair.second.capacity_demand;
  const auto limit = *service.capacity.limit;
  if (demand <= limit) return std::nullopt;
  return make_record(ConflictType::ResourceCapacity, pair, std::nullopt,
                     service.service_id + ": demand " + std::to_string(demand) +
                         " exceeds capacity " + std::to_string(limit));
}

std::optional<ConflictRecord> eval_qualitative(
    const OverlapPair& pair, const ServiceDescriptor& service) {
  if (!pair.same_service()) return std::nullopt;
  for (const auto& attr : service.qualitative_attrs) {
    auto a = pair.first.qualitative_values.find(attr.name);
    auto b = pair.second.qualitative_values.find(attr.name);
    if (a == pair.first.qualitative_values.end() ||
        b == pair.second.qualitative_values.end() || a->second == b->second) {
      continue;
    }
    return make_record(ConflictType::QualitativeNonFunctional, pair, attr.name,
                       service.service_id + "." + attr.name + ": " +
                           a->second + " (" + pair.first.user_id + ") vs " +
                           b->second + " (" + pair.second.user_id + ")");
  }
  return std::nullopt;
}

namespace {

// True when `value`, requested by `requester`, is unacceptable to `other`.
bool outside_preference(double value, double other_value,
                        const std::string& other_user,
                        const std::string& service, const std::string& attr,
                        const PreferenceRanges& ranges) {
  const auto* range = ranges.find(other_user, service, attr);
  if (!range) return value != other_value;
  return !range->contains(value);
}

}  // namespace

std::optional<ConflictRecord> eval_quantitative(
    const OverlapPair& pair, const ServiceDescriptor& service,
    const PreferenceRanges& ranges, QuantitativeMode mode) {
  if (!pair.same_service()) return std::nullopt;
  const auto& a = pair.first;
  const auto& b = pair.second;
  for (const auto& attr : service.quantitative_attrs) {
    auto va = a.quantitative_values.find(attr.name);
    auto vb = b.quantitative_values.find(attr.name);
    if (va == a.quantitative_values.end() ||
        vb == b.quantitative_values.end()) {
      continue;
    }
    bool conflict = false;
    if (mode == QuantitativeMode::Ontology) {
      conflict = va->second != vb->second;
    } else {
      conflict = outside_preference(va->second, vb->second, b.user_id,
                                    service.service_id, attr.name, ranges) ||
                 outside_preference(vb->second, va->second, a.user_id,
                                    service.service_id, attr.name, ranges);
    }
    if (!conflict) continue;
    return make_record(ConflictType::QuantitativeNonFunctional, pair,
                       attr.name,
                       service.service_id + "." + attr.name + ": " +
                           number(va->second) + " (" + a.user_id + ") vs " +
                           number(vb->second) + " (" + b.user_id + ")");
  }
  return std::nullopt;
}

std::optional<ConflictRecord> eval_direct_impact(
    const OverlapPair& pair, const ServiceRegistry& registry) {
  if (pair.same_service()) return std::nullopt;
  if (pair.first.state != ServiceState::On ||
      pair.second.state != ServiceState::On) {
    return std::nullopt;
  }
  if (!registry.has_dependency(pair.first.service_id, pair.second.service_id)) {
    return std::nullopt;
  }
  return make_record(ConflictType::DirectServiceImpact, pair, std::nullopt,
                     who(pair.first) + " and " + who(pair.second) +
                         " are functionally dependent");
}

std::optional<ConflictRecord> eval_indirect_impact(
    const OverlapPair& pair, const ServiceRegistry& registry,
    ImpactStrictness strictness) {
  if (pair.same_service()) return std::nullopt;
  if (pair.first.state != ServiceState::On ||
      pair.second.state != ServiceState::On) {
    return std::nullopt;
  }
  if (registry.has_dependency(pair.first.service_id, pair.second.service_id)) {
    return std::nullopt;
  }
  const auto* da = registry.find(pair.first.service_id);
  const auto* db = registry.find(pair.second.service_id);
  if (!da || !db) return std::nullopt;

  for (const auto& ea : da->env_effects) {
    for (const auto& eb : db->env_effects) {
      if (ea.property != eb.property) continue;
      bool opposing =
          (ea.direction == EnvDirection::Raises &&
           eb.direction == EnvDirection::Lowers) ||
          (ea.direction == EnvDirection::Lowers &&
           eb.direction == EnvDirection::Raises);
      if (strictness == ImpactStrictness::Directional && !opposing) continue;
      return make_record(
          ConflictType::IndirectServiceImpact, pair, std::nullopt,
          who(pair.first) + " " + std::string(to_string(ea.direction)) +
              " and " + who(pair.second) + " " +
              std::string(to_string(eb.direction)) + " " + ea.property);
    }
  }
  return std::nullopt;
}

bool RuleConfig::any_enabled() const {
  return std::any_of(enabled.begin(), enabled.end(), [](bool b) { return b; });
}

RuleConfig parse_rule_config(std::istream& in) {
  RuleConfig cfg;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    if (doc.contains("rules")) {
      for (const auto& [name, on] : doc["rules"].items()) {
        cfg.set_enabled(parse_conflict_type(name), on.get<bool>());
      }
    }
    if (doc.contains("quantitative_mode")) {
      cfg.quantitative_mode =
          parse_quantitative_mode(doc["quantitative_mode"].get<std::string>());
    }
    if (doc.contains("indirect_strictness")) {
      cfg.indirect_strictness = parse_impact_strictness(
          doc["indirect_strictness"].get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("rule config: ") + e.what());
  }
  return cfg;
}

}  // namespace iotconflict
