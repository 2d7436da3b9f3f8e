#include "iotconflict/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iotconflict/timestamp.hpp"

namespace iotconflict {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t j = i;
    while (j < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c));
  });
}

enum class StatusKind { Start, Stop, Reading, Other };

StatusKind classify_status(std::string_view status) {
  auto s = upper(status);
  if (s == "ON" || s == "OPEN") return StatusKind::Start;
  if (s == "OFF" || s == "CLOSE") return StatusKind::Stop;
  if (parse_number(status)) return StatusKind::Reading;
  return StatusKind::Other;
}

struct PendingEvent {
  ServiceEvent event;
  std::map<std::string, std::pair<double, std::size_t>> samples;
};

}  // namespace

RawSensorRecord parse_casas_line(std::string_view line) {
  auto fields = split_ws(line);
  if (fields.size() != 4) {
    throw Error(ErrorCode::MalformedLine,
                "expected 4 fields, got " + std::to_string(fields.size()));
  }
  std::string stamp(fields[0]);
  stamp += ' ';
  stamp += fields[1];
  auto t = parse_timestamp(stamp);
  if (!t) {
    throw Error(ErrorCode::MalformedLine, "bad timestamp '" + stamp + "'");
  }
  return RawSensorRecord{*t, std::string(fields[2]), std::string(fields[3]), 0};
}

bool IngestReport::reconciles() const {
  return events_emitted == on_records &&
         lines_read ==
             on_records + matched_off + readings_folded + discarded.size() &&
         unmatched_off <= discarded.size();
}

IngestResult pair_on_off(std::span<const RawSensorRecord> records,
                         const SensorMap& sensors,
                         const ServiceRegistry& registry,
                         std::string_view user_id) {
  IngestResult result;
  auto& report = result.report;
  report.lines_read = records.size();

  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].time < records[i - 1].time) {
      throw Error(ErrorCode::InvalidArgument,
                  "records are not sorted by time (line " +
                      std::to_string(records[i].line) + ")");
    }
  }

  std::map<std::string, PendingEvent, std::less<>> pending;
  std::vector<ServiceEvent> events;

  auto close = [&](PendingEvent& p, Timestamp end) {
    p.event.interval.end = end;
    for (const auto& [attr, acc] : p.samples) {
      p.event.quantitative_values[attr] =
          acc.first / static_cast<double>(acc.second);
    }
    events.push_back(validate_event(p.event, registry));
  };

  for (const auto& rec : records) {
    auto binding = sensors.find(rec.sensor);
    if (binding == sensors.end()) {
      throw Error(ErrorCode::UnmappedSensor,
                  rec.sensor + " (line " + std::to_string(rec.line) + ")");
    }
    switch (classify_status(rec.status)) {
      case StatusKind::Start: {
        ++report.on_records;
        auto it = pending.find(rec.sensor);
        if (it != pending.end()) {
          ++report.unmatched_on;
          close(it->second, rec.time);
          pending.erase(it);
        }
        PendingEvent p;
        p.event.event_id = std::string(user_id) + "-" + rec.sensor + "-" +
                           std::to_string(rec.line);
        p.event.service_id = binding->second.service_id;
        p.event.state = ServiceState::On;
        p.event.interval = {rec.time, rec.time};
        p.event.location = canonicalize_location(binding->second.location);
        p.event.user_id = std::string(user_id);
        pending.emplace(rec.sensor, std::move(p));
        break;
      }
      case StatusKind::Stop: {
        auto it = pending.find(rec.sensor);
        if (it == pending.end()) {
          ++report.unmatched_off;
          report.discarded.push_back({rec.line, "OFF without pending ON"});
        } else {
          ++report.matched_off;
          close(it->second, rec.time);
          pending.erase(it);
        }
        break;
      }
      case StatusKind::Reading: {
        const auto& attr = binding->second.reading_attribute;
        auto it = pending.find(rec.sensor);
        if (attr.empty()) {
          report.discarded.push_back({rec.line, "reading ignored for sensor"});
        } else if (it == pending.end()) {
          report.discarded.push_back({rec.line, "reading outside any interval"});
        } else {
          auto& acc = it->second.samples[attr];
          acc.first += *parse_number(rec.status);
          acc.second += 1;
          ++report.readings_folded;
        }
        break;
      }
      case StatusKind::Other:
        report.discarded.push_back(
            {rec.line, "unrecognized status '" + rec.status + "'"});
        break;
    }
  }

  if (!pending.empty()) {
    auto last = records.back().time;
    for (auto& [sensor, p] : pending) {
      ++report.unmatched_on;
      close(p, last);
    }
  }

  report.events_emitted = events.size();
  result.events = EventSequence(std::move(events));
  return result;
}

IngestResult ingest_casas(std::istream& in, const SensorMap& sensors,
                          const ServiceRegistry& registry,
                          std::string_view user_id) {
  std::vector<RawSensorRecord> records;
  std::vector<DiscardedRecord> malformed;
  std::string line;
  std::size_t lineno = 0;
  std::size_t nonblank = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    ++nonblank;
    try {
      auto rec = parse_casas_line(line);
      rec.line = lineno;
      records.push_back(std::move(rec));
    } catch (const Error& e) {
      malformed.push_back({lineno, e.what()});
    }
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.time < b.time; });

  auto result = pair_on_off(records, sensors, registry, user_id);
  auto& report = result.report;
  report.lines_read = nonblank;
  report.discarded.insert(report.discarded.end(), malformed.begin(),
                          malformed.end());
  std::stable_sort(report.discarded.begin(), report.discarded.end(),
                   [](const auto& a, const auto& b) { return a.line < b.line; });
  return result;
}

EnrichedFormat enriched_format_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  return (ext == ".jsonl" || ext == ".ndjson") ? EnrichedFormat::JsonLines
                                               : EnrichedFormat::Csv;
}

namespace {

// Minimal RFC 4180 field splitter for a single physical line.
std::vector<std::string> split_csv(std::string_view line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\r' && i + 1 == line.size()) {
      break;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw Error(ErrorCode::MalformedLine,
                "unterminated quote on line " + std::to_string(lineno));
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos &&
      (s.empty() || (s.front() != ' ' && s.back() != ' '))) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

constexpr std::string_view kFixedColumns[] = {
    "event_id", "service_id", "location", "user_id",
    "start",    "end",        "state",    "capacity_demand"};

bool is_fixed_column(std::string_view name) {
  return std::find(std::begin(kFixedColumns), std::end(kFixedColumns), name) !=
         std::end(kFixedColumns);
}

Timestamp require_timestamp(std::string_view text, std::size_t lineno) {
  auto t = parse_timestamp(text);
  if (!t) {
    throw Error(ErrorCode::MalformedLine, "bad timestamp '" +
                                              std::string(text) + "' on line " +
                                              std::to_string(lineno));
  }
  return *t;
}

std::uint32_t parse_demand(std::string_view text, std::size_t lineno) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v < 1) {
    throw Error(ErrorCode::MalformedLine,
                "capacity_demand must be a positive integer on line " +
                    std::to_string(lineno));
  }
  return v;
}

// Field values gathered from either representation before building an event.
struct RowFields {
  std::map<std::string, std::string> fixed;
  std::map<std::string, double> quantitative;
  std::map<std::string, std::string> qualitative;
};

ServiceEvent build_event(const RowFields& row, std::size_t lineno,
                         const ServiceRegistry& registry) {
  auto get = [&](std::string_view key, bool required) -> std::string {
    auto it = row.fixed.find(std::string(key));
    if (it == row.fixed.end() || it->second.empty()) {
      if (required) {
        throw Error(ErrorCode::MalformedLine,
                    "missing '" + std::string(key) + "' on line " +
                        std::to_string(lineno));
      }
      return {};
    }
    return it->second;
  };

  ServiceEvent ev;
  ev.event_id = get("event_id", false);
  if (ev.event_id.empty()) ev.event_id = "e" + std::to_string(lineno);
  ev.service_id = get("service_id", true);
  ev.location = canonicalize_location(get("location", true));
  ev.user_id = get("user_id", true);
  auto start = require_timestamp(get("start", true), lineno);
  auto end = require_timestamp(get("end", true), lineno);
  ev.interval = make_interval(start, end);
  try {
    ev.state = parse_state(get("state", true));
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedLine,
                std::string(e.what()) + " on line " + std::to_string(lineno));
  }
  auto demand = get("capacity_demand", false);
  if (!demand.empty()) ev.capacity_demand = parse_demand(demand, lineno);
  ev.quantitative_values = row.quantitative;
  ev.qualitative_values = row.qualitative;
  return validate_event(ev, registry);
}

std::vector<ServiceEvent> parse_csv_rows(std::istream& in,
                                         const ServiceRegistry& registry) {
  std::vector<ServiceEvent> events;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    auto cells = split_csv(line, lineno);
    if (header.empty()) {
      header = std::move(cells);
      std::set<std::string> seen;
      for (const auto& col : header) {
        if (!seen.insert(col).second) {
          throw Error(ErrorCode::MalformedLine, "duplicate column " + col);
        }
        if (!is_fixed_column(col) && col.rfind("q:", 0) != 0 &&
            col.rfind("n:", 0) != 0) {
          throw Error(ErrorCode::MalformedLine, "unknown column '" + col +
                                                    "' (attribute columns "
                                                    "need a q: or n: prefix)");
        }
      }
      continue;
    }
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    RowFields row;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& col = header[i];
      auto& cell = cells[i];
      if (col.rfind("q:", 0) == 0) {
        if (cell.empty()) continue;
        auto v = parse_number(cell);
        if (!v) {
          throw Error(ErrorCode::MalformedLine,
                      "non-numeric value '" + cell + "' for " + col +
                          " on line " + std::to_string(lineno));
        }
        row.quantitative[col.substr(2)] = *v;
      } else if (col.rfind("n:", 0) == 0) {
        if (!cell.empty()) row.qualitative[col.substr(2)] = cell;
      } else {
        row.fixed[col] = cell;
      }
    }
    events.push_back(build_event(row, lineno, registry));
  }
  return events;
}

std::vector<ServiceEvent> parse_jsonl_rows(std::istream& in,
                                           const ServiceRegistry& registry) {
  std::vector<ServiceEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(lineno) + " is not an object");
    }
    RowFields row;
    for (const auto& [key, value] : obj.items()) {
      if (key.rfind("q:", 0) == 0) {
        if (value.is_null()) continue;
        if (!value.is_number()) {
          throw Error(ErrorCode::MalformedLine,
                      key + " must be numeric on line " +
                          std::to_string(lineno));
        }
        row.quantitative[key.substr(2)] = value.get<double>();
      } else if (key.rfind("n:", 0) == 0) {
        if (value.is_null()) continue;
        if (!value.is_string()) {
          throw Error(ErrorCode::MalformedLine,
                      key + " must be a string on line " +
                          std::to_string(lineno));
        }
        row.qualitative[key.substr(2)] = value.get<std::string>();
      } else if (is_fixed_column(key)) {
        row.fixed[key] = value.is_string() ? value.get<std::string>()
                                           : value.dump();
      } else {
        throw Error(ErrorCode::MalformedLine, "unknown field '" + key +
                                                  "' on line " +
                                                  std::to_string(lineno));
      }
    }
    events.push_back(build_event(row, lineno, registry));
  }
  return events;
}

}  // namespace

EventSequence parse_enriched(std::istream& in, EnrichedFormat format,
                             const ServiceRegistry& registry) {
  auto events = format == EnrichedFormat::Csv ? parse_csv_rows(in, registry)
                                              : parse_jsonl_rows(in, registry);
  return merge_sequences({EventSequence(std::move(events))});
}

void write_enriched(std::ostream& out, const EventSequence& seq,
                    EnrichedFormat format) {
  if (format == EnrichedFormat::JsonLines) {
    for (const auto& ev : seq) {
      json obj = {
          {"event_id", ev.event_id},
          {"service_id", ev.service_id},
          {"location", ev.location},
          {"user_id", ev.user_id},
          {"start", format_timestamp(ev.interval.start)},
          {"end", format_timestamp(ev.interval.end)},
          {"state", to_string(ev.state)},
          {"capacity_demand", ev.capacity_demand},
      };
      for (const auto& [k, v] : ev.quantitative_values) obj["q:" + k] = v;
      for (const auto& [k, v] : ev.qualitative_values) obj["n:" + k] = v;
      out << obj.dump() << '\n';
    }
    return;
  }

  std::set<std::string> quant_cols;
  std::set<std::string> qual_cols;
  for (const auto& ev : seq) {
    for (const auto& kv : ev.quantitative_values) quant_cols.insert(kv.first);
    for (const auto& kv : ev.qualitative_values) qual_cols.insert(kv.first);
  }
  bool first = true;
  for (auto col : kFixedColumns) {
    out << (first ? "" : ",") << col;
    first = false;
  }
  for (const auto& c : quant_cols) out << "," << csv_escape("q:" + c);
  for (const auto& c : qual_cols) out << "," << csv_escape("n:" + c);
  out << '\n';

  for (const auto& ev : seq) {
    out << csv_escape(ev.event_id) << ',' << csv_escape(ev.service_id) << ','
        << csv_escape(ev.location) << ',' << csv_escape(ev.user_id) << ','
        << format_timestamp(ev.interval.start) << ','
        << format_timestamp(ev.interval.end) << ',' << to_string(ev.state)
        << ',' << ev.capacity_demand;
    for (const auto& c : quant_cols) {
      out << ',';
      auto it = ev.quantitative_values.find(c);
      if (it != ev.quantitative_values.end()) out << format_number(it->second);
    }
    for (const auto& c : qual_cols) {
      out << ',';
      auto it = ev.qualitative_values.find(c);
      if (it != ev.qualitative_values.end()) {
        if (it->second.empty()) {
          throw Error(ErrorCode::InvalidAttributeValue,
                      "empty nominal value cannot be written to CSV");
        }
        out << csv_escape(it->second);
      }
    }
    out << '\n';
  }
}

namespace {

json parse_json_document(std::istream& in, std::string_view what) {
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError,
                std::string(what) + ": " + e.what());
  }
}

ServiceDescriptor descriptor_from_json(const json& j) {
  ServiceDescriptor d;
  d.service_id = j.at("service_id").get<std::string>();
  d.name = j.value("name", d.service_id);
  d.functions = j.value("functions", std::vector<std::string>{});
  if (j.contains("capacity") && !j["capacity"].is_null()) {
    const auto& cap = j["capacity"];
    if (cap.is_string()) {
      if (cap.get<std::string>() != "unbounded") {
        throw Error(ErrorCode::ConfigError,
                    d.service_id + ": capacity must be an integer or "
                                   "\"unbounded\"");
      }
    } else {
      auto n = cap.get<long long>();
      if (n < 0) {
        throw Error(ErrorCode::ConfigError,
                    d.service_id + ": capacity must be non-negative");
      }
      d.capacity = Capacity::bounded(static_cast<std::uint32_t>(n));
    }
  }
  for (const auto& q : j.value("qualitative", json::array())) {
    d.qualitative_attrs.push_back(
        {q.at("name").get<std::string>(),
         q.value("values", std::vector<std::string>{})});
  }
  for (const auto& q : j.value("quantitative", json::array())) {
    QuantitativeAttribute a;
    a.name = q.at("name").get<std::string>();
    a.unit = q.value("unit", "");
    if (q.contains("min") && !q["min"].is_null()) a.min = q["min"].get<double>();
    if (q.contains("max") && !q["max"].is_null()) a.max = q["max"].get<double>();
    d.quantitative_attrs.push_back(std::move(a));
  }
  for (const auto& dep : j.value("depends_on", json::array())) {
    d.depends_on.insert(dep.get<std::string>());
  }
  for (const auto& e : j.value("env_effects", json::array())) {
    d.env_effects.push_back(
        {e.at("property").get<std::string>(),
         parse_env_direction(e.value("direction", "neutral"))});
  }
  return d;
}

json descriptor_to_json(const ServiceDescriptor& d) {
  json j;
  j["service_id"] = d.service_id;
  j["name"] = d.name;
  j["functions"] = d.functions;
  if (d.capacity.is_bounded()) {
    j["capacity"] = *d.capacity.limit;
  } else {
    j["capacity"] = "unbounded";
  }
  j["qualitative"] = json::array();
  for (const auto& a : d.qualitative_attrs) {
    j["qualitative"].push_back({{"name", a.name}, {"values", a.allowed}});
  }
  j["quantitative"] = json::array();
  for (const auto& a : d.quantitative_attrs) {
    json q = {{"name", a.name}, {"unit", a.unit}};
    if (a.min) q["min"] = *a.min;
    if (a.max) q["max"] = *a.max;
    j["quantitative"].push_back(std::move(q));
  }
  j["depends_on"] = d.depends_on;
  j["env_effects"] = json::array();
  for (const auto& e : d.env_effects) {
    j["env_effects"].push_back(
        {{"property", e.property}, {"direction", to_string(e.direction)}});
  }
  return j;
}

}  // namespace

ServiceRegistry parse_registry(std::istream& in) {
  auto doc = parse_json_document(in, "registry");
  ServiceRegistry reg;
  try {
    for (const auto& s : doc.at("services")) reg.add(descriptor_from_json(s));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("registry: ") + e.what());
  }
  return reg;
}

void write_registry(std::ostream& out, const ServiceRegistry& registry) {
  json doc;
  doc["services"] = json::array();
  for (const auto& [id, d] : registry) {
    doc["services"].push_back(descriptor_to_json(d));
  }
  out << doc.dump(2) << '\n';
}

SensorMap parse_sensor_map(std::istream& in) {
  auto doc = parse_json_document(in, "sensor map");
  SensorMap map;
  try {
    for (const auto& [sensor, b] : doc.at("sensors").items()) {
      SensorBinding binding;
      binding.service_id = b.value("service_id", sensor);
      binding.location = b.at("location").get<std::string>();
      binding.reading_attribute = b.value("reading_attribute", "");
      map.emplace(sensor, std::move(binding));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("sensor map: ") + e.what());
  }
  return map;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return in;
}

}  // namespace

ServiceRegistry load_registry(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_registry(in);
}

SensorMap load_sensor_map(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_sensor_map(in);
}

EventSequence load_enriched(const std::filesystem::path& path,
                            const ServiceRegistry& registry) {
  auto in = open_input(path);
  return parse_enriched(in, enriched_format_for(path), registry);
}

void save_enriched(const std::filesystem::path& path,
                   const EventSequence& seq) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_enriched(out, seq, enriched_format_for(path));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace iotconflict
