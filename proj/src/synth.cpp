#include "iotconflict/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "iotconflict/ingest.hpp"
#include "iotconflict/selection.hpp"
#include "iotconflict/timestamp.hpp"

namespace iotconflict {

using nlohmann::json;

namespace {

QuantitativePreference preference_from_json(const json& j) {
  QuantitativePreference p;
  p.step = j.value("step", 0.0);
  if (j.contains("components")) {
    for (const auto& c : j["components"]) {
      p.components.push_back({c.value("weight", 1.0), c.at("mean").get<double>(),
                              c.value("spread", 0.0)});
    }
  } else {
    p.components.push_back(
        {1.0, j.at("mean").get<double>(), j.value("spread", 0.0)});
  }
  return p;
}

Habit habit_from_json(const json& j) {
  Habit h;
  h.service_id = j.at("service_id").get<std::string>();
  h.location = canonicalize_location(j.at("location").get<std::string>());
  h.start_hour = j.at("start_hour").get<double>();
  h.duration_minutes = j.value("duration_minutes", 60.0);
  h.jitter_minutes = j.value("jitter_minutes", 0.0);
  h.probability = j.value("probability", 1.0);
  h.state = parse_state(j.value("state", "On"));
  h.capacity_demand = j.value("capacity_demand", 1u);
  const json quantitative = j.value("quantitative", json::object());
  for (const auto& [attr, pref] : quantitative.items()) {
    h.quantitative[attr] = preference_from_json(pref);
  }
  const json qualitative = j.value("qualitative", json::object());
  for (const auto& [attr, vals] : qualitative.items()) {
    h.qualitative[attr] = vals.get<std::vector<std::string>>();
  }
  return h;
}

void check(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

void validate_spec(const ScenarioSpec& spec) {
  check(spec.days >= 1, ErrorCode::InfeasibleSpec, "days must be >= 1");
  check(spec.comfort_threshold >= 0.0, ErrorCode::InfeasibleSpec,
        "comfort_threshold must be >= 0");
  check(spec.injection_start_hour >= 0.0 && spec.injection_start_hour < 24.0,
        ErrorCode::InfeasibleSpec, "injection_start_hour must be in [0, 24)");
  for (const auto& [type, rate] : spec.injection_rates) {
    check(rate >= 0.0 && std::isfinite(rate), ErrorCode::InfeasibleSpec,
          "injection rate for " + std::string(to_string(type)) +
              " must be >= 0");
  }
  for (const auto& r : spec.residents) {
    check(!r.user_id.empty(), ErrorCode::InfeasibleSpec, "resident without id");
    for (const auto& h : r.habits) {
      const auto& d = spec.services.at(h.service_id);
      check(h.probability >= 0.0 && h.probability <= 1.0,
            ErrorCode::InfeasibleSpec, "habit probability outside [0, 1]");
      check(h.duration_minutes > 0.0, ErrorCode::InfeasibleSpec,
            "habit duration must be positive");
      check(h.capacity_demand >= 1, ErrorCode::InfeasibleSpec,
            "capacity_demand must be >= 1");
      for (const auto& [attr, pref] : h.quantitative) {
        check(d.find_quantitative(attr) != nullptr,
              ErrorCode::UnknownAttribute, h.service_id + "." + attr);
        check(!pref.components.empty(), ErrorCode::InfeasibleSpec,
              "empty preference for " + attr);
        for (const auto& c : pref.components) {
          check(c.weight > 0.0 && c.spread >= 0.0, ErrorCode::InfeasibleSpec,
                "mixture weights must be > 0 and spreads >= 0");
        }
      }
      for (const auto& [attr, values] : h.qualitative) {
        check(d.find_qualitative(attr) != nullptr,
              ErrorCode::UnknownAttribute, h.service_id + "." + attr);
        check(!values.empty(), ErrorCode::InfeasibleSpec,
              "no nominal choices for " + attr);
      }
    }
  }
}

double draw_value(std::mt19937_64& rng, const QuantitativePreference& pref,
                  const QuantitativeAttribute* domain) {
  std::vector<double> weights;
  for (const auto& c : pref.components) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const auto& c = pref.components[pick(rng)];

  double v = c.mean;
  if (c.spread > 0.0) {
    std::normal_distribution<double> normal(c.mean, c.spread);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      v = normal(rng);
      if (std::abs(v - c.mean) <= 2.0 * c.spread) break;
      v = c.mean;
    }
  }
  if (pref.step > 0.0) v = std::round(v / pref.step) * pref.step;
  if (domain && domain->min) v = std::max(v, *domain->min);
  if (domain && domain->max) v = std::min(v, *domain->max);
  return v;
}

Timestamp at_offset(Timestamp day, double minutes) {
  auto secs = static_cast<long long>(std::llround(minutes * 60.0));
  return day + std::chrono::seconds{secs};
}

std::string padded(long long n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*lld", width, n);
  return buf;
}

// What an injected pair looks like before timing and users are attached.
struct InjectionTemplate {
  ServiceEvent a;
  ServiceEvent b;
};

std::vector<const ServiceDescriptor*> services_preferring_unbounded(
    const ServiceRegistry& reg) {
  std::vector<const ServiceDescriptor*> out;
  for (const auto& [id, d] : reg) {
    if (!d.capacity.is_bounded()) out.push_back(&d);
  }
  for (const auto& [id, d] : reg) {
    if (d.capacity.is_bounded()) out.push_back(&d);
  }
  return out;
}

InjectionTemplate build_template(ConflictType type, const ScenarioSpec& spec) {
  const auto& reg = spec.services;
  InjectionTemplate t;
  t.a.state = t.b.state = ServiceState::On;
  auto infeasible = [&](const std::string& why) {
    return Error(ErrorCode::InfeasibleSpec,
                 std::string(to_string(type)) + ": " + why);
  };

  switch (type) {
    case ConflictType::Functional: {
      auto candidates = services_preferring_unbounded(reg);
      if (candidates.empty()) throw infeasible("registry has no services");
      t.a.service_id = t.b.service_id = candidates.front()->service_id;
      t.b.state = ServiceState::Off;
      return t;
    }
    case ConflictType::ResourceCapacity: {
      for (const auto& [id, d] : reg) {
        if (!d.capacity.is_bounded()) continue;
        t.a.service_id = t.b.service_id = id;
        t.a.capacity_demand = t.b.capacity_demand =
            std::max<std::uint32_t>(1, *d.capacity.limit);
        return t;
      }
      throw infeasible("no service with bounded capacity");
    }
    case ConflictType::QualitativeNonFunctional: {
      for (const auto* d : services_preferring_unbounded(reg)) {
        for (const auto& attr : d->qualitative_attrs) {
          if (attr.allowed.size() == 1) continue;
          t.a.service_id = t.b.service_id = d->service_id;
          t.a.qualitative_values[attr.name] =
              attr.allowed.empty() ? "alpha" : attr.allowed[0];
          t.b.qualitative_values[attr.name] =
              attr.allowed.empty() ? "beta" : attr.allowed[1];
          return t;
        }
      }
      throw infeasible("no nominal attribute with two distinct values");
    }
    case ConflictType::QuantitativeNonFunctional: {
      for (const auto* d : services_preferring_unbounded(reg)) {
        if (d->quantitative_attrs.empty()) continue;
        const auto* attr = d->find_quantitative(spec.label_attribute);
        if (!attr) attr = &d->quantitative_attrs.front();
        const double gap = 2.0 * spec.comfort_threshold + 1.0;
        double lo = 0.0, hi = gap;
        if (attr->min && attr->max) {
          lo = *attr->min;
          hi = *attr->max;
        } else if (attr->min) {
          lo = *attr->min;
          hi = lo + gap;
        } else if (attr->max) {
          hi = *attr->max;
          lo = hi - gap;
        }
        if (hi - lo <= spec.comfort_threshold) continue;
        t.a.service_id = t.b.service_id = d->service_id;
        t.a.quantitative_values[attr->name] = lo;
        t.b.quantitative_values[attr->name] = hi;
        return t;
      }
      throw infeasible("no numeric attribute with a wide enough domain");
    }
    case ConflictType::DirectServiceImpact: {
      for (const auto& [id, d] : reg) {
        for (const auto& dep : d.depends_on) {
          if (!reg.contains(dep)) continue;
          t.a.service_id = id;
          t.b.service_id = dep;
          return t;
        }
      }
      throw infeasible("no dependency between registered services");
    }
    case ConflictType::IndirectServiceImpact: {
      std::optional<std::pair<std::string, std::string>> shared;
      for (auto i = reg.begin(); i != reg.end(); ++i) {
        for (auto j = std::next(i); j != reg.end(); ++j) {
          if (reg.has_dependency(i->first, j->first)) continue;
          for (const auto& ea : i->second.env_effects) {
            for (const auto& eb : j->second.env_effects) {
              if (ea.property != eb.property) continue;
              bool opposing = (ea.direction == EnvDirection::Raises &&
                               eb.direction == EnvDirection::Lowers) ||
                              (ea.direction == EnvDirection::Lowers &&
                               eb.direction == EnvDirection::Raises);
              if (opposing) {
                t.a.service_id = i->first;
                t.b.service_id = j->first;
                return t;
              }
              if (!shared) shared.emplace(i->first, j->first);
            }
          }
        }
      }
      if (!shared) throw infeasible("no independent services share an effect");
      t.a.service_id = shared->first;
      t.b.service_id = shared->second;
      return t;
    }
  }
  throw infeasible("unsupported type");
}

std::size_t injections_on_day(double rate, int day) {
  constexpr double kEps = 1e-9;
  auto upto = [&](int d) {
    return static_cast<long long>(std::floor(rate * d + kEps));
  };
  return static_cast<std::size_t>(upto(day + 1) - upto(day));
}

using PairKey = std::pair<std::string, std::string>;

PairKey key_of(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

}  // namespace

ScenarioSpec parse_scenario_spec(std::istream& in) {
  ScenarioSpec spec;
  try {
    auto doc = json::parse(in);
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.days = doc.value("days", 1);
    if (doc.contains("start_date")) {
      auto day = parse_date(doc["start_date"].get<std::string>());
      if (!day) throw Error(ErrorCode::ConfigError, "bad start_date");
      spec.start_day = *day;
    }
    json registry = json::object();
    registry["services"] = doc.value("services", json::array());
    std::stringstream services;
    services << registry;
    spec.services = parse_registry(services);
    for (const auto& r : doc.value("residents", json::array())) {
      ResidentProfile profile;
      profile.user_id = r.at("user_id").get<std::string>();
      for (const auto& h : r.value("habits", json::array())) {
        profile.habits.push_back(habit_from_json(h));
      }
      spec.residents.push_back(std::move(profile));
    }
    const json rates = doc.value("injection_rates", json::object());
    for (const auto& [name, rate] : rates.items()) {
      spec.injection_rates[parse_conflict_type(name)] = rate.get<double>();
    }
    spec.injection_location = canonicalize_location(
        doc.value("injection_location", spec.injection_location));
    spec.injection_start_hour =
        doc.value("injection_start_hour", spec.injection_start_hour);
    spec.label_attribute = doc.value("label_attribute", spec.label_attribute);
    spec.comfort_threshold =
        doc.value("comfort_threshold", spec.comfort_threshold);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("scenario: ") + e.what());
  }
  return spec;
}

ScenarioSpec load_scenario_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return parse_scenario_spec(in);
}

SyntheticCorpus generate(const ScenarioSpec& spec) {
  validate_spec(spec);

  SyntheticCorpus corpus;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ServiceEvent> events;

  // Background routines.
  for (int day = 0; day < spec.days; ++day) {
    const Timestamp midnight = spec.start_day + std::chrono::days{day};
    for (const auto& resident : spec.residents) {
      for (std::size_t h = 0; h < resident.habits.size(); ++h) {
        const auto& habit = resident.habits[h];
        const double roll = unit(rng);
        const double jitter =
            habit.jitter_minutes > 0.0
                ? std::uniform_real_distribution<double>(
                      -habit.jitter_minutes, habit.jitter_minutes)(rng)
                : 0.0;
        if (roll >= habit.probability) continue;

        const auto& descriptor = spec.services.at(habit.service_id);
        ServiceEvent ev;
        ev.event_id = resident.user_id + "-d" + padded(day, 3) + "-h" +
                      padded(static_cast<long long>(h), 2);
        ev.service_id = habit.service_id;
        ev.state = habit.state;
        auto start = at_offset(midnight, habit.start_hour * 60.0 + jitter);
        ev.interval = {start, at_offset(start, habit.duration_minutes)};
        ev.location = habit.location;
        ev.user_id = resident.user_id;
        ev.capacity_demand = habit.capacity_demand;
        for (const auto& [attr, pref] : habit.quantitative) {
          ev.quantitative_values[attr] =
              draw_value(rng, pref, descriptor.find_quantitative(attr));
        }
        for (const auto& [attr, choices] : habit.qualitative) {
          std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
          ev.qualitative_values[attr] = choices[pick(rng)];
        }
        events.push_back(validate_event(ev, spec.services));
      }
    }
  }

  // Injected conflicts.
  std::map<PairKey, ConflictType> injected;
  std::map<ConflictType, InjectionTemplate> templates;
  for (const auto& [type, rate] : spec.injection_rates) {
    if (rate > 0.0) templates.emplace(type, build_template(type, spec));
  }
  if (!templates.empty() && spec.residents.size() < 2) {
    throw Error(ErrorCode::InfeasibleSpec,
                "injecting conflicts needs at least two residents");
  }
  const auto slots_per_day =
      static_cast<std::size_t>((24.0 - spec.injection_start_hour) * 5.0);
  std::size_t serial = 0;
  for (int day = 0; day < spec.days; ++day) {
    const Timestamp midnight = spec.start_day + std::chrono::days{day};
    std::size_t slot = 0;
    for (const auto& [type, tmpl] : templates) {
      const auto n = injections_on_day(spec.injection_rates.at(type), day);
      for (std::size_t i = 0; i < n; ++i, ++slot, ++serial) {
        if (slot >= slots_per_day) {
          throw Error(ErrorCode::InfeasibleSpec,
                      "too many injected conflicts per day");
        }
        const double base =
            spec.injection_start_hour * 60.0 + 12.0 * static_cast<double>(slot);
        const auto& ua = spec.residents[serial % spec.residents.size()];
        const auto& ub = spec.residents[(serial + 1) % spec.residents.size()];
        const std::string stem =
            "inj-" + std::string(to_string(type)) + "-" +
            padded(static_cast<long long>(corpus.injected[type]), 4);

        ServiceEvent a = tmpl.a;
        a.event_id = stem + "-a";
        a.user_id = ua.user_id;
        a.location = spec.injection_location;
        a.interval = {at_offset(midnight, base),
                      at_offset(midnight, base + 10.0)};
        ServiceEvent b = tmpl.b;
        b.event_id = stem + "-b";
        b.user_id = ub.user_id;
        b.location = spec.injection_location;
        b.interval = {at_offset(midnight, base + 2.0),
                      at_offset(midnight, base + 12.0)};

        injected.emplace(key_of(a.event_id, b.event_id), type);
        corpus.injected[type] += 1;
        events.push_back(validate_event(a, spec.services));
        events.push_back(validate_event(b, spec.services));
      }
    }
  }

  corpus.events = merge_sequences({EventSequence(std::move(events))});

  for (const auto& pair :
       find_overlaps(corpus.events, corpus.events.service_ids())) {
    GroundTruthLabel label;
    label.first_event = pair.first.event_id;
    label.second_event = pair.second.event_id;
    auto it = injected.find(key_of(label.first_event, label.second_event));
    if (it != injected.end()) {
      label.is_conflict = true;
      label.type = it->second;
    } else if (pair.same_service()) {
      auto va = pair.first.quantitative_values.find(spec.label_attribute);
      auto vb = pair.second.quantitative_values.find(spec.label_attribute);
      if (va != pair.first.quantitative_values.end() &&
          vb != pair.second.quantitative_values.end() &&
          std::abs(va->second - vb->second) > spec.comfort_threshold) {
        label.is_conflict = true;
        label.type = ConflictType::QuantitativeNonFunctional;
      }
    }
    corpus.labels.push_back(std::move(label));
  }
  return corpus;
}

void replay_to_enriched(const EventSequence& seq,
                        const std::vector<GroundTruthLabel>& labels,
                        const std::filesystem::path& corpus_path,
                        const std::filesystem::path& labels_path) {
  save_enriched(corpus_path, seq);
  std::ofstream out(labels_path);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot write " + labels_path.string());
  }
  write_labels(out, labels);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write failed: " + labels_path.string());
  }
}

}  // namespace iotconflict
