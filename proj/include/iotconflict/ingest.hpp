#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iotconflict/model.hpp"

namespace iotconflict {

/// One line of a CASAS-style log: `DATE TIME SENSOR STATUS`.
struct RawSensorRecord {
  Timestamp time;
  std::string sensor;
  std::string status;  // "ON", "OFF", or a numeric reading kept verbatim
  std::size_t line = 0;

  friend bool operator==(const RawSensorRecord&,
                         const RawSensorRecord&) = default;
};

/// Throws MalformedLine on a wrong field count or an unparseable timestamp.
RawSensorRecord parse_casas_line(std::string_view line);

/// How a log sensor maps onto a registered service. `reading_attribute`
/// names the quantitative attribute that numeric readings of this sensor
/// feed; leave it empty to discard readings.
struct SensorBinding {
  std::string service_id;
  std::string location;
  std::string reading_attribute;
};

using SensorMap = std::map<std::string, SensorBinding, std::less<>>;

struct DiscardedRecord {
  std::size_t line = 0;
  std::string reason;
};

/// Accounting for one ingestion run. Every record is exactly one of: an ON
/// (each yields one event), a matched OFF, a folded reading, or discarded.
struct IngestReport {
  std::size_t events_emitted = 0;
  std::size_t unmatched_on = 0;   // closed at end of log or by a repeated ON
  std::size_t unmatched_off = 0;  // OFF with no pending ON; also discarded
  std::size_t on_records = 0;
  std::size_t matched_off = 0;
  std::size_t readings_folded = 0;
  std::size_t lines_read = 0;
  std::vector<DiscardedRecord> discarded;

  /// True when the counters account for every line read.
  bool reconciles() const;
};

struct IngestResult {
  EventSequence events;
  IngestReport report;
};

/// Pairs each ON with the next OFF of the same sensor.
///
/// A repeated ON for a sensor that is already on closes the pending event at
/// the new ON and opens another; an ON still pending at the end of the log is
/// closed at the log's last timestamp. Both cases count as unmatched_on but
/// still emit an event. Numeric readings are averaged into the pending event
/// of the same sensor when the binding names a reading attribute.
///
/// Records must be sorted by time (InvalidArgument otherwise). Throws
/// UnmappedSensor for sensors absent from `sensors`.
IngestResult pair_on_off(std::span<const RawSensorRecord> records,
                         const SensorMap& sensors,
                         const ServiceRegistry& registry,
                         std::string_view user_id);

/// Reads a whole CASAS log. Malformed and blank lines are reported as
/// discarded instead of aborting; records are stably sorted by time before
/// pairing.
IngestResult ingest_casas(std::istream& in, const SensorMap& sensors,
                          const ServiceRegistry& registry,
                          std::string_view user_id);

enum class EnrichedFormat { Csv, JsonLines };

/// `.jsonl`/`.ndjson` select JSON lines, anything else CSV.
EnrichedFormat enriched_format_for(const std::filesystem::path& path);

/// Parses the enriched event format. Columns: event_id (optional),
/// service_id, location, user_id, start, end, state, capacity_demand
/// (optional), then `q:<attr>` numeric and `n:<attr>` nominal attribute
/// columns. Empty attribute cells mean "absent".
EventSequence parse_enriched(std::istream& in, EnrichedFormat format,
                             const ServiceRegistry& registry);

void write_enriched(std::ostream& out, const EventSequence& seq,
                    EnrichedFormat format);

/// JSON registry: {"services": [{"service_id": ..., "capacity": n|"unbounded",
/// "qualitative": [...], "quantitative": [...], "depends_on": [...],
/// "env_effects": [...]}, ...]}
ServiceRegistry parse_registry(std::istream& in);
void write_registry(std::ostream& out, const ServiceRegistry& registry);

/// JSON sensor map: {"sensors": {"L001": {"service_id": ..., "location": ...,
/// "reading_attribute": ...}}}
SensorMap parse_sensor_map(std::istream& in);

/// File helpers; IoFailure when the file cannot be opened.
ServiceRegistry load_registry(const std::filesystem::path& path);
SensorMap load_sensor_map(const std::filesystem::path& path);
EventSequence load_enriched(const std::filesystem::path& path,
                            const ServiceRegistry& registry);
void save_enriched(const std::filesystem::path& path, const EventSequence& seq);

}  // namespace iotconflict
