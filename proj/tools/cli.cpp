#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "iotconflict/detector.hpp"
#include "iotconflict/ingest.hpp"
#include "iotconflict/selection.hpp"
#include "iotconflict/synth.hpp"
#include "iotconflict/timestamp.hpp"

namespace iotconflict::cli {
namespace {

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::IoFailure, "cannot write " + path);
    }
    stream_ = path.empty() ? &fallback : &file_;
    path_ = path;
  }
  std::ostream& stream() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorCode::IoFailure, "write failed: " + path_);
  }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
  std::string path_;
};

ServiceRegistry registry_for(const RunConfig& cfg) {
  if (cfg.registry_path.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("--registry is required (or set ") + kRegistryEnv +
                    ")");
  }
  return load_registry(cfg.registry_path);
}

void check_common(const RunConfig& cfg) {
  if (cfg.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be ≥ 1");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "train-fraction must be in (0, 1)");
  }
  if (cfg.min_overlap_seconds < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "min-overlap must be >= 0");
  }
}

PipelineOptions pipeline_options(const RunConfig& cfg) {
  PipelineOptions opt;
  if (!cfg.rules_path.empty()) {
    std::ifstream in(cfg.rules_path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + cfg.rules_path);
    opt.rules = parse_rule_config(in);
  }
  opt.rules.quantitative_mode = cfg.mode;
  opt.rules.indirect_strictness = cfg.strictness;
  opt.k = cfg.k;
  opt.all_services = cfg.oracle;
  opt.train_fraction = cfg.train_fraction;
  opt.min_overlap = std::chrono::duration_cast<Duration>(
      std::chrono::duration<double>(cfg.min_overlap_seconds));
  return opt;
}

EventSequence load_corpus(const RunConfig& cfg, const ServiceRegistry& reg) {
  if (cfg.inputs.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "expected exactly one corpus file");
  }
  return load_enriched(cfg.inputs.front(), reg);
}

void run_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.users.empty() && cfg.users.size() != cfg.inputs.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "give one --user per input file or none");
  }
  auto reg = registry_for(cfg);
  auto sensors = load_sensor_map(cfg.sensor_map_path);

  std::vector<EventSequence> parts;
  nlohmann::json reports = nlohmann::json::array();
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    const auto& path = cfg.inputs[i];
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
    auto user = cfg.users.empty()
                    ? std::filesystem::path(path).stem().string()
                    : cfg.users[i];
    auto result = ingest_casas(in, sensors, reg, user);
    const auto& r = result.report;
    nlohmann::json discarded = nlohmann::json::array();
    for (const auto& d : r.discarded) {
      discarded.push_back({{"line", d.line}, {"reason", d.reason}});
    }
    reports.push_back({{"input", path},
                       {"user_id", user},
                       {"lines_read", r.lines_read},
                       {"on_records", r.on_records},
                       {"events_emitted", r.events_emitted},
                       {"unmatched_on", r.unmatched_on},
                       {"unmatched_off", r.unmatched_off},
                       {"matched_off", r.matched_off},
                       {"readings_folded", r.readings_folded},
                       {"discarded", std::move(discarded)}});
    parts.push_back(std::move(result.events));
  }
  auto merged = merge_sequences(parts);

  if (cfg.output_path.empty()) {
    write_enriched(out, merged, EnrichedFormat::Csv);
  } else {
    save_enriched(cfg.output_path, merged);
  }

  std::ostream& report_fallback = cfg.output_path.empty() ? err : out;
  Output report(cfg.report_path, report_fallback);
  report.stream() << reports.dump(2) << '\n';
  report.finish();
}

void run_rank(const RunConfig& cfg, std::ostream& out) {
  auto reg = registry_for(cfg);
  auto seq = load_corpus(cfg, reg);
  auto ranked = rank_services(seq);
  auto selected = select_top_k(ranked, cfg.k);

  Output o(cfg.output_path, out);
  auto& s = o.stream();
  s << std::left << std::setw(6) << "rank" << std::setw(16) << "service_id"
    << std::setw(20) << "location" << std::right << std::setw(10)
    << "use_count" << std::setw(16) << "total_seconds" << "  selected\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& u = ranked[i];
    s << std::left << std::setw(6) << (i + 1) << std::setw(16) << u.service_id
      << std::setw(20) << u.location << std::right << std::setw(10)
      << u.use_count << std::setw(16) << std::fixed << std::setprecision(0)
      << u.total_seconds() << "  " << (selected.count(u.service_id) ? "*" : "")
      << '\n';
  }
  o.finish();
}

void run_detect(const RunConfig& cfg, std::ostream& out) {
  check_common(cfg);
  auto reg = registry_for(cfg);
  auto seq = load_corpus(cfg, reg);
  auto result = run_pipeline(seq, reg, pipeline_options(cfg));
  Output o(cfg.output_path, out);
  write_detection(o.stream(), result.result);
  o.finish();
}

void run_metrics(const RunConfig& cfg, std::ostream& out) {
  check_common(cfg);
  auto reg = registry_for(cfg);
  auto seq = load_corpus(cfg, reg);
  auto pipeline = run_pipeline(seq, reg, pipeline_options(cfg));

  std::vector<GroundTruthLabel> labels;
  if (cfg.labels_path.empty()) {
    labels = label_by_comfort_rule(pipeline.pairs, cfg.attribute,
                                   cfg.comfort_threshold);
  } else {
    // Only pairs whose events both fall in the detection part can be judged.
    std::set<std::string> detection_ids;
    for (const auto& ev : pipeline.detection) detection_ids.insert(ev.event_id);
    std::set<std::string> all_ids;
    for (const auto& ev : seq) all_ids.insert(ev.event_id);
    for (auto& l : load_labels(cfg.labels_path)) {
      for (const auto* id : {&l.first_event, &l.second_event}) {
        if (!all_ids.count(*id)) {
          throw Error(ErrorCode::UnknownPair,
                      "label references unknown event " + *id);
        }
      }
      if (detection_ids.count(l.first_event) &&
          detection_ids.count(l.second_event)) {
        labels.push_back(std::move(l));
      }
    }
  }
  auto report = evaluate(pipeline.result, labels, pipeline.detection, cfg.scope);
  Output o(cfg.output_path, out);
  write_evaluation(o.stream(), report);
  o.finish();
}

void run_synth(const RunConfig& cfg, std::ostream& out) {
  auto spec = load_scenario_spec(cfg.spec_path);
  if (cfg.seed) spec.seed = *cfg.seed;
  auto corpus = generate(spec);
  replay_to_enriched(corpus.events, corpus.labels, cfg.output_path,
                     cfg.labels_path);
  if (!cfg.registry_out_path.empty()) {
    Output reg(cfg.registry_out_path, out);
    write_registry(reg.stream(), spec.services);
    reg.finish();
  }
  std::size_t positives = 0;
  for (const auto& l : corpus.labels) positives += l.is_conflict ? 1 : 0;
  out << "events: " << corpus.events.size()
      << ", labelled pairs: " << corpus.labels.size()
      << ", conflicts: " << positives << '\n';
}

void add_pipeline_options(CLI::App* sub, RunConfig& cfg, std::string& mode,
                          std::string& strictness) {
  sub->add_option("--k", cfg.k, "Number of top-ranked services to analyse")
      ->default_val(7);
  sub->add_option("--mode", mode, "Quantitative rule: ontology or hybrid")
      ->check(CLI::IsMember({"ontology", "hybrid"}))
      ->default_val("hybrid");
  sub->add_option("--strictness", strictness,
                  "Indirect impact rule: paper or directional")
      ->check(CLI::IsMember({"paper", "directional"}))
      ->default_val("directional");
  sub->add_flag("--oracle", cfg.oracle,
                "Analyse every service instead of the top k");
  sub->add_option("--rules", cfg.rules_path, "Rule configuration (JSON)");
  sub->add_option("--train-fraction", cfg.train_fraction,
                  "Chronological share of each user's events used to learn "
                  "preference ranges")
      ->default_val(0.8);
  sub->add_option("--min-overlap", cfg.min_overlap_seconds,
                  "Minimum overlap in seconds for a candidate pair")
      ->default_val(0.0);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  RunConfig cfg;
  std::string mode = "hybrid";
  std::string strictness = "directional";
  std::string scope;
  std::uint64_t seed = 0;

  CLI::App app{"Conflict detection for multi-resident smart-home service logs",
               "iotconflict"};
  app.require_subcommand(1);
  if (const char* env = std::getenv(kRegistryEnv)) cfg.registry_path = env;

  auto* ingest = app.add_subcommand("ingest", "Pair CASAS ON/OFF logs into an "
                                              "enriched corpus");
  auto* rank = app.add_subcommand("rank", "Print service usage ranking");
  auto* detect = app.add_subcommand("detect", "Detect conflicts in a corpus");
  auto* metrics = app.add_subcommand(
      "metrics", "Evaluate detection against ground-truth labels");
  auto* synth = app.add_subcommand("synth", "Generate a labelled corpus");

  for (auto* sub : {ingest, rank, detect, metrics}) {
    sub->add_option("--registry", cfg.registry_path,
                    std::string("Service registry (JSON); defaults to $") +
                        kRegistryEnv);
  }
  for (auto* sub : {ingest, rank, detect, metrics, synth}) {
    sub->add_option("-o,--output", cfg.output_path, "Output file");
  }

  ingest->add_option("inputs", cfg.inputs, "CASAS log files")->required();
  ingest->add_option("--sensor-map", cfg.sensor_map_path, "Sensor map (JSON)")
      ->required();
  ingest->add_option("--user", cfg.users, "User id per input file, in order");
  ingest->add_option("--report", cfg.report_path, "Ingest report (JSON)");

  rank->add_option("corpus", cfg.inputs, "Enriched corpus")->required();
  rank->add_option("--k", cfg.k, "Mark the top k services")->default_val(7);

  detect->add_option("corpus", cfg.inputs, "Enriched corpus")->required();
  add_pipeline_options(detect, cfg, mode, strictness);

  metrics->add_option("corpus", cfg.inputs, "Enriched corpus")->required();
  add_pipeline_options(metrics, cfg, mode, strictness);
  metrics->add_option("--labels", cfg.labels_path,
                      "Ground-truth labels; omitted: label by comfort rule");
  metrics->add_option("--scope", scope, "Restrict evaluation to one type");
  metrics->add_option("--threshold", cfg.comfort_threshold,
                      "Comfort rule threshold")
      ->default_val(3.0);
  metrics->add_option("--attribute", cfg.attribute,
                      "Attribute for the comfort rule")
      ->default_val("temperature");

  synth->add_option("--spec", cfg.spec_path, "Scenario spec (JSON)")
      ->required();
  auto* seed_opt = synth->add_option("--seed", seed, "Override the spec seed");
  synth->add_option("--labels", cfg.labels_path, "Labels output file")
      ->required();
  synth->add_option("--registry-out", cfg.registry_out_path,
                    "Write the scenario's registry here");
  synth->get_option("--output")->required();

  std::vector<const char*> argv{"iotconflict"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }

  try {
    cfg.mode = parse_quantitative_mode(mode);
    cfg.strictness = parse_impact_strictness(strictness);
    if (!scope.empty()) cfg.scope = parse_conflict_type(scope);
    if (seed_opt->count() > 0) cfg.seed = seed;

    if (ingest->parsed()) {
      cfg.command = Command::Ingest;
      run_ingest(cfg, out, err);
    } else if (rank->parsed()) {
      cfg.command = Command::Rank;
      if (cfg.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be ≥ 1");
      run_rank(cfg, out);
    } else if (detect->parsed()) {
      cfg.command = Command::Detect;
      run_detect(cfg, out);
    } else if (metrics->parsed()) {
      cfg.command = Command::Metrics;
      run_metrics(cfg, out);
    } else {
      cfg.command = Command::Synth;
      run_synth(cfg, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::IoFailure ? kIoError : kValidationError;
  }
  return kOk;
}

}  // namespace iotconflict::cli
