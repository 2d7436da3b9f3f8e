#include "iotconflict/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "iotconflict/timestamp.hpp"

namespace iotconflict {

using nlohmann::json;

std::size_t DetectionResult::count(ConflictType type) const {
  auto it = counts_by_type.find(type);
  return it == counts_by_type.end() ? 0 : it->second;
}

bool record_before(const ConflictRecord& a, const ConflictRecord& b) {
  const auto& pa = a.pair;
  const auto& pb = b.pair;
  if (pa.location() != pb.location()) return pa.location() < pb.location();
  if (pa.overlap.start != pb.overlap.start) {
    return pa.overlap.start < pb.overlap.start;
  }
  if (a.type != b.type) return a.type < b.type;
  if (pa.first.event_id != pb.first.event_id) {
    return pa.first.event_id < pb.first.event_id;
  }
  return pa.second.event_id < pb.second.event_id;
}

DetectionResult detect(const std::vector<OverlapPair>& pairs,
                       const RuleConfig& config,
                       const PreferenceRanges& ranges,
                       const ServiceRegistry& registry) {
  if (!config.any_enabled()) {
    throw Error(ErrorCode::ConfigError, "no rules enabled");
  }
  DetectionResult result;
  for (auto t : kAllConflictTypes) {
    result.counts_by_type[t] = 0;
    result.conflicting_services[t];
  }

  auto keep = [&](std::optional<ConflictRecord> rec) {
    if (rec) result.conflicts.push_back(std::move(*rec));
  };

  for (const auto& pair : pairs) {
    if (pair.same_service()) {
      const auto& service = registry.at(pair.first.service_id);
      if (config.is_enabled(ConflictType::Functional)) {
        keep(eval_functional(pair));
      }
      if (config.is_enabled(ConflictType::ResourceCapacity)) {
        keep(eval_capacity(pair, service));
      }
      if (config.is_enabled(ConflictType::QualitativeNonFunctional)) {
        keep(eval_qualitative(pair, service));
      }
      if (config.is_enabled(ConflictType::QuantitativeNonFunctional)) {
        keep(eval_quantitative(pair, service, ranges,
                               config.quantitative_mode));
      }
    } else {
      if (config.is_enabled(ConflictType::DirectServiceImpact)) {
        keep(eval_direct_impact(pair, registry));
      }
      if (config.is_enabled(ConflictType::IndirectServiceImpact)) {
        keep(eval_indirect_impact(pair, registry, config.indirect_strictness));
      }
    }
  }

  std::sort(result.conflicts.begin(), result.conflicts.end(), record_before);
  for (const auto& rec : result.conflicts) {
    result.counts_by_type[rec.type] += 1;
    auto a = rec.pair.first.service_id;
    auto b = rec.pair.second.service_id;
    if (b < a) std::swap(a, b);
    result.conflicting_services[rec.type].emplace(std::move(a), std::move(b));
  }
  return result;
}

void write_detection(std::ostream& out, const DetectionResult& result) {
  for (const auto& rec : result.conflicts) {
    const auto& p = rec.pair;
    json j = {
        {"record", "conflict"},
        {"type", to_string(rec.type)},
        {"service_ids", {p.first.service_id, p.second.service_id}},
        {"event_ids", {p.first.event_id, p.second.event_id}},
        {"user_ids", {p.first.user_id, p.second.user_id}},
        {"location", p.location()},
        {"relation", to_string(p.relation)},
        {"overlap_start", format_timestamp(p.overlap.start)},
        {"overlap_end", format_timestamp(p.overlap.end)},
        {"weight", rec.weight},
        {"attribute", rec.attribute ? json(*rec.attribute) : json(nullptr)},
        {"detail", rec.detail},
    };
    out << j.dump() << '\n';
  }
  json counts = json::object();
  json services = json::object();
  for (auto t : kAllConflictTypes) {
    counts[std::string(to_string(t))] = result.count(t);
    json list = json::array();
    auto it = result.conflicting_services.find(t);
    if (it != result.conflicting_services.end()) {
      for (const auto& [a, b] : it->second) list.push_back({a, b});
    }
    services[std::string(to_string(t))] = std::move(list);
  }
  json summary = {{"record", "summary"},
                  {"total", result.total()},
                  {"counts_by_type", std::move(counts)},
                  {"conflicting_services", std::move(services)}};
  out << summary.dump() << '\n';
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_bool(const std::string& s, std::size_t lineno) {
  std::string l = s;
  for (auto& c : l) c = static_cast<char>(std::tolower(c));
  if (l == "1" || l == "true" || l == "yes") return true;
  if (l == "0" || l == "false" || l == "no") return false;
  throw Error(ErrorCode::MalformedLine,
              "bad is_conflict '" + s + "' on line " + std::to_string(lineno));
}

using PairKey = std::pair<std::string, std::string>;

PairKey key_of(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

}  // namespace

std::vector<GroundTruthLabel> read_labels(std::istream& in) {
  std::vector<GroundTruthLabel> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_commas(line);
    if (labels.empty() && !cells.empty() && cells[0] == "event_id_1") continue;
    if (cells.size() < 3 || cells.size() > 4 || cells[0].empty() ||
        cells[1].empty()) {
      throw Error(ErrorCode::MalformedLine,
                  "label line " + std::to_string(lineno));
    }
    GroundTruthLabel label;
    label.first_event = cells[0];
    label.second_event = cells[1];
    label.is_conflict = parse_bool(cells[2], lineno);
    if (cells.size() == 4 && !cells[3].empty()) {
      label.type = parse_conflict_type(cells[3]);
    }
    labels.push_back(std::move(label));
  }
  return labels;
}

void write_labels(std::ostream& out,
                  const std::vector<GroundTruthLabel>& labels) {
  out << "event_id_1,event_id_2,is_conflict,type\n";
  for (const auto& l : labels) {
    out << l.first_event << ',' << l.second_event << ','
        << (l.is_conflict ? 1 : 0) << ',';
    if (l.type) out << to_string(*l.type);
    out << '\n';
  }
}

std::vector<GroundTruthLabel> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_labels(in);
}

EvaluationReport make_report(std::size_t tp, std::size_t fp, std::size_t tn,
                             std::size_t fn) {
  EvaluationReport r;
  r.true_positives = tp;
  r.false_positives = fp;
  r.true_negatives = tn;
  r.false_negatives = fn;
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0
                    : static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  return r;
}

EvaluationReport evaluate(const DetectionResult& result,
                          const std::vector<GroundTruthLabel>& labels,
                          const EventSequence& universe,
                          std::optional<ConflictType> scope) {
  std::unordered_set<std::string> known;
  for (const auto& ev : universe) known.insert(ev.event_id);

  std::set<PairKey> predicted;
  for (const auto& rec : result.conflicts) {
    if (scope && rec.type != *scope) continue;
    predicted.insert(
        key_of(rec.pair.first.event_id, rec.pair.second.event_id));
  }

  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::set<PairKey> judged;
  for (const auto& label : labels) {
    for (const auto* id : {&label.first_event, &label.second_event}) {
      if (!known.count(*id)) {
        throw Error(ErrorCode::UnknownPair, "label references unknown event " +
                                                *id);
      }
    }
    if (scope && label.type && *label.type != *scope) continue;
    auto key = key_of(label.first_event, label.second_event);
    if (!judged.insert(key).second) continue;
    const bool hit = predicted.count(key) > 0;
    if (label.is_conflict) {
      hit ? ++tp : ++fn;
    } else {
      hit ? ++fp : ++tn;
    }
  }
  return make_report(tp, fp, tn, fn);
}

void write_evaluation(std::ostream& out, const EvaluationReport& r) {
  json j = {{"true_positives", r.true_positives},
            {"false_positives", r.false_positives},
            {"true_negatives", r.true_negatives},
            {"false_negatives", r.false_negatives},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"accuracy", r.accuracy}};
  out << j.dump(2) << '\n';
}

std::vector<GroundTruthLabel> label_by_comfort_rule(
    const std::vector<OverlapPair>& pairs, const std::string& attribute,
    double threshold) {
  std::vector<GroundTruthLabel> labels;
  labels.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto a = p.first.quantitative_values.find(attribute);
    auto b = p.second.quantitative_values.find(attribute);
    if (a == p.first.quantitative_values.end() ||
        b == p.second.quantitative_values.end()) {
      throw Error(ErrorCode::MissingAttribute,
                  "'" + attribute + "' missing on pair " + p.first.event_id +
                      "," + p.second.event_id);
    }
    GroundTruthLabel l;
    l.first_event = p.first.event_id;
    l.second_event = p.second.event_id;
    l.is_conflict = std::abs(a->second - b->second) > threshold;
    if (l.is_conflict) l.type = ConflictType::QuantitativeNonFunctional;
    labels.push_back(std::move(l));
  }
  return labels;
}

std::pair<EventSequence, EventSequence> chronological_split(
    const EventSequence& seq, double train_fraction) {
  if (!(train_fraction >= 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "train fraction must be in [0, 1)");
  }
  std::map<std::string, std::size_t> per_user;
  for (const auto& ev : seq) per_user[ev.user_id] += 1;

  std::map<std::string, std::size_t> seen;
  std::vector<ServiceEvent> train;
  std::vector<ServiceEvent> test;
  for (const auto& ev : seq) {
    auto cutoff = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(per_user[ev.user_id])));
    if (seen[ev.user_id]++ < cutoff) {
      train.push_back(ev);
    } else {
      test.push_back(ev);
    }
  }
  return {EventSequence(std::move(train)), EventSequence(std::move(test))};
}

PipelineOutput run_pipeline(const EventSequence& seq,
                            const ServiceRegistry& registry,
                            const PipelineOptions& options) {
  if (options.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  PipelineOutput out;
  std::tie(out.training, out.detection) =
      chronological_split(seq, options.train_fraction);
  out.ranges = learn_ranges(out.training);
  out.ranking = rank_services(seq);
  out.selected = options.all_services ? seq.service_ids()
                                      : select_top_k(out.ranking, options.k);
  out.pairs = find_overlaps(out.detection, out.selected, options.min_overlap);
  out.result = detect(out.pairs, options.rules, out.ranges, registry);
  return out;
}

}  // namespace iotconflict
