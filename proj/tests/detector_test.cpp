#include <gtest/gtest.h>

#include <json.hpp>
#include <random>
#include <sstream>

#include "iotconflict/detector.hpp"
#include "test_support.hpp"

namespace iotconflict {
namespace {

using testing::at;
using testing::event;
using testing::hours;

ServiceRegistry home() {
  ServiceRegistry reg;
  auto tv = testing::service("TV1");
  tv.qualitative_attrs.push_back({"channel", {}});
  tv.quantitative_attrs.push_back({"volume", "dB", {}, {}});
  reg.add(tv);
  auto ac = testing::service("AC1");
  ac.quantitative_attrs.push_back({"temperature", "C", {}, {}});
  ac.env_effects.push_back({"temperature", EnvDirection::Lowers});
  ac.depends_on.insert("WIN1");
  reg.add(ac);
  reg.add(testing::service("WIN1"));
  auto heater = testing::service("HEAT1");
  heater.env_effects.push_back({"temperature", EnvDirection::Raises});
  reg.add(heater);
  auto console = testing::service("GAME1");
  console.capacity = Capacity::bounded(1);
  reg.add(console);
  return reg;
}

ServiceEvent with_temp(ServiceEvent ev, double t) {
  ev.quantitative_values["temperature"] = t;
  return ev;
}

EventSequence scenario_one() {
  return EventSequence(
      {event("tv-r2", "TV1", "R2",
             {at("2018-06-15T19:30"), at("2018-06-15T20:30")}, ServiceState::On),
       event("tv-r1", "TV1", "R1",
             {at("2018-06-15T20:10"), at("2018-06-15T20:40")},
             ServiceState::Off)});
}

EventSequence scenario_two() {
  std::vector<ServiceEvent> events;
  const double r1[] = {20, 21, 22, 21};
  const double r2[] = {25, 26, 27, 26};
  for (int d = 0; d < 4; ++d) {
    // History on the four preceding days; the two users never overlap.
    events.push_back(with_temp(event("r1-" + std::to_string(d), "AC1", "R1",
                                     hours(24.0 * (d - 4) + 9, 24.0 * (d - 4) + 10)),
                               r1[d]));
    events.push_back(with_temp(event("r2-" + std::to_string(d), "AC1", "R2",
                                     hours(24.0 * (d - 4) + 12, 24.0 * (d - 4) + 13)),
                               r2[d]));
  }
  events.push_back(with_temp(event("r1-now", "AC1", "R1", hours(21, 22)), 21));
  events.push_back(with_temp(event("r2-now", "AC1", "R2", hours(21.25, 22.5)), 26));
  return EventSequence(events);
}

TEST(Detect, ScenarioOneIsOneFunctionalConflict) {
  auto out = run_pipeline(scenario_one(), home(), {});
  ASSERT_EQ(out.pairs.size(), 1u);
  EXPECT_EQ(out.result.total(), 1u);
  EXPECT_EQ(out.result.count(ConflictType::Functional), 1u);
  const auto& rec = out.result.conflicts.at(0);
  EXPECT_EQ(rec.type, ConflictType::Functional);
  EXPECT_NEAR(rec.weight, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(out.result.conflicting_services.at(ConflictType::Functional),
            (std::set<std::pair<std::string, std::string>>{{"TV1", "TV1"}}));
}

TEST(Detect, ScenarioTwoIsOneQuantitativeConflict) {
  auto out = run_pipeline(scenario_two(), home(), {});
  EXPECT_EQ(out.training.size(), 8u);
  EXPECT_EQ(out.detection.size(), 2u);
  const auto* r1 = out.ranges.find("R1", "AC1", "temperature");
  ASSERT_NE(r1, nullptr);
  EXPECT_DOUBLE_EQ(r1->median, 21.0);
  EXPECT_NEAR(r1->sigma, std::sqrt(0.5), 1e-12);
  ASSERT_EQ(out.result.total(), 1u);
  EXPECT_EQ(out.result.count(ConflictType::QuantitativeNonFunctional), 1u);
  EXPECT_EQ(out.result.conflicts[0].attribute, "temperature");
  for (auto t : kAllConflictTypes) {
    if (t != ConflictType::QuantitativeNonFunctional) {
      EXPECT_EQ(out.result.count(t), 0u) << to_string(t);
    }
  }
}

TEST(Detect, EmptyInputAndNoRules) {
  auto res = detect({}, RuleConfig{}, {}, home());
  EXPECT_EQ(res.total(), 0u);
  for (auto t : kAllConflictTypes) EXPECT_EQ(res.count(t), 0u);

  RuleConfig none;
  for (auto t : kAllConflictTypes) none.set_enabled(t, false);
  try {
    detect({}, none, {}, home());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Detect, OnePairMayMatchSeveralRules) {
  auto a = event("a", "TV1", "R1", hours(19, 21));
  auto b = event("b", "TV1", "R2", hours(20, 22), ServiceState::Off);
  a.qualitative_values["channel"] = "news";
  b.qualitative_values["channel"] = "sports";
  a.quantitative_values["volume"] = 30;
  b.quantitative_values["volume"] = 50;
  RuleConfig cfg;
  cfg.quantitative_mode = QuantitativeMode::Ontology;
  auto res = detect({make_overlap_pair(a, b)}, cfg, {}, home());
  EXPECT_EQ(res.total(), 3u);
  EXPECT_EQ(res.count(ConflictType::Functional), 1u);
  EXPECT_EQ(res.count(ConflictType::QualitativeNonFunctional), 1u);
  EXPECT_EQ(res.count(ConflictType::QuantitativeNonFunctional), 1u);

  cfg.set_enabled(ConflictType::Functional, false);
  EXPECT_EQ(detect({make_overlap_pair(a, b)}, cfg, {}, home()).total(), 2u);
}

TEST(Detect, CrossServicePairsUseImpactRules) {
  auto ac = event("ac", "AC1", "R1", hours(12, 14));
  auto win = event("win", "WIN1", "R2", hours(13, 15));
  auto heat = event("heat", "HEAT1", "R3", hours(13, 15));
  EventSequence seq({ac, win, heat});
  auto pairs = find_overlaps(seq, seq.service_ids());
  auto res = detect(pairs, RuleConfig{}, {}, home());
  EXPECT_EQ(res.count(ConflictType::DirectServiceImpact), 1u);
  EXPECT_EQ(res.count(ConflictType::IndirectServiceImpact), 1u);
  EXPECT_EQ(res.total(), 2u);
  EXPECT_TRUE(std::is_sorted(res.conflicts.begin(), res.conflicts.end(),
                             record_before));
}

TEST(WriteDetection, RecordSchemaAndDeterminism) {
  auto out = run_pipeline(scenario_one(), home(), {});
  std::ostringstream first, second;
  write_detection(first, out.result);
  write_detection(second, run_pipeline(scenario_one(), home(), {}).result);
  EXPECT_EQ(first.str(), second.str());

  std::istringstream lines(first.str());
  std::string line;
  std::vector<nlohmann::json> docs;
  while (std::getline(lines, line)) docs.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(docs.size(), 2u);
  const auto& c = docs[0];
  EXPECT_EQ(c["record"], "conflict");
  EXPECT_EQ(c["type"], "functional");
  EXPECT_EQ(c["service_ids"], nlohmann::json::array({"TV1", "TV1"}));
  EXPECT_EQ(c["event_ids"], nlohmann::json::array({"tv-r2", "tv-r1"}));
  EXPECT_EQ(c["user_ids"], nlohmann::json::array({"R2", "R1"}));
  EXPECT_EQ(c["location"], "living room");
  EXPECT_EQ(c["overlap_start"], "2018-06-15T20:10:00");
  EXPECT_EQ(c["overlap_end"], "2018-06-15T20:30:00");
  EXPECT_NEAR(c["weight"].get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_TRUE(c["attribute"].is_null());
  const auto& s = docs[1];
  EXPECT_EQ(s["record"], "summary");
  EXPECT_EQ(s["total"], 1);
  EXPECT_EQ(s["counts_by_type"]["functional"], 1);
  EXPECT_EQ(s["counts_by_type"]["indirect_service_impact"], 0);
}

TEST(Report, PaperScaleConfusionMatrix) {
  auto r = make_report(45, 9, 290, 8);
  EXPECT_EQ(r.total(), 352u);
  EXPECT_NEAR(r.accuracy, 335.0 / 352.0, 1e-12);
  EXPECT_NEAR(r.accuracy, 0.95, 0.005);
  EXPECT_NEAR(r.precision, 45.0 / 54.0, 1e-12);
  EXPECT_NEAR(r.recall, 45.0 / 53.0, 1e-12);
  EXPECT_NEAR(r.f1, 2.0 * 45 / (2.0 * 45 + 9 + 8), 1e-12);
}

TEST(Report, DegenerateDenominators) {
  auto none_predicted = make_report(0, 0, 5, 3);
  EXPECT_EQ(none_predicted.precision, 0.0);
  EXPECT_EQ(none_predicted.recall, 0.0);
  EXPECT_EQ(none_predicted.f1, 0.0);
  auto empty = make_report(0, 0, 0, 0);
  EXPECT_EQ(empty.accuracy, 0.0);
  auto perfect = make_report(4, 0, 6, 0);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.accuracy, 1.0);
}

TEST(Report, MetricsStayInUnitInterval) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<std::size_t> d(0, 20);
  for (int i = 0; i < 2000; ++i) {
    auto r = make_report(d(rng), d(rng), d(rng), d(rng));
    for (double m : {r.precision, r.recall, r.f1, r.accuracy}) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 1.0);
    }
    EXPECT_EQ(r.f1 == 0.0, r.precision * r.recall == 0.0);
  }
}

TEST(Evaluate, CountsAgainstLabels) {
  auto seq = scenario_one();
  auto out = run_pipeline(seq, home(), {});
  std::vector<GroundTruthLabel> labels{{"tv-r1", "tv-r2", true, {}}};
  auto r = evaluate(out.result, labels, seq);
  EXPECT_EQ(r.true_positives, 1u);
  EXPECT_EQ(r.accuracy, 1.0);

  labels[0].is_conflict = false;
  EXPECT_EQ(evaluate(out.result, labels, seq).false_positives, 1u);

  // Scoped to another type: the functional record is not a prediction.
  labels[0].is_conflict = true;
  auto scoped = evaluate(out.result, labels, seq,
                         ConflictType::QuantitativeNonFunctional);
  EXPECT_EQ(scoped.false_negatives, 1u);

  // A label typed for another conflict is outside the scope.
  labels[0].type = ConflictType::Functional;
  EXPECT_EQ(evaluate(out.result, labels, seq,
                     ConflictType::QuantitativeNonFunctional)
                .total(),
            0u);

  // Duplicate labels in either order are judged once.
  labels.push_back({"tv-r2", "tv-r1", true, {}});
  EXPECT_EQ(evaluate(out.result, labels, seq).total(), 1u);

  try {
    evaluate(out.result, {{"tv-r1", "ghost", true, {}}}, seq);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPair);
  }
}

TEST(Labels, RoundTrip) {
  std::vector<GroundTruthLabel> labels{
      {"a", "b", true, ConflictType::Functional},
      {"c", "d", false, {}},
      {"e", "f", true, {}}};
  std::stringstream buf;
  write_labels(buf, labels);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')),
            "event_id_1,event_id_2,is_conflict,type");
  EXPECT_EQ(read_labels(buf), labels);

  std::istringstream bare("x,y,1\nz,w,false,capacity\n");
  auto parsed = read_labels(bare);
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_TRUE(parsed[0].is_conflict);
  EXPECT_EQ(parsed[1].type, ConflictType::ResourceCapacity);
  EXPECT_FALSE(parsed[1].is_conflict);
}

std::vector<OverlapPair> temp_pairs(std::initializer_list<std::pair<double, double>> temps) {
  std::vector<OverlapPair> out;
  int i = 0;
  for (auto [x, y] : temps) {
    auto a = with_temp(event("a" + std::to_string(i), "AC1", "R1", hours(1, 3)), x);
    auto b = with_temp(event("b" + std::to_string(i), "AC1", "R2", hours(2, 4)), y);
    out.push_back(make_overlap_pair(a, b));
    ++i;
  }
  return out;
}

TEST(ComfortRule, StrictThreshold) {
  auto labels = label_by_comfort_rule(temp_pairs({{22, 25}, {20, 24}, {21, 21}}),
                                      "temperature");
  ASSERT_EQ(labels.size(), 3u);
  EXPECT_FALSE(labels[0].is_conflict);
  EXPECT_TRUE(labels[1].is_conflict);
  EXPECT_EQ(labels[1].type, ConflictType::QuantitativeNonFunctional);
  EXPECT_FALSE(labels[2].is_conflict);

  auto pairs = temp_pairs({{22, 26}});
  pairs[0].second.quantitative_values.clear();
  try {
    label_by_comfort_rule(pairs, "temperature");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingAttribute);
  }
}

TEST(ComfortRule, LowerThresholdNeverRemovesPositives) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> t(16, 30);
  std::vector<OverlapPair> pairs;
  for (int i = 0; i < 300; ++i) {
    auto more = temp_pairs({{std::round(t(rng) * 2) / 2, std::round(t(rng) * 2) / 2}});
    more[0].first.event_id += "-" + std::to_string(i);
    pairs.push_back(more[0]);
  }
  std::size_t previous = pairs.size() + 1;
  for (double th = 0; th <= 8; th += 0.25) {
    std::size_t positives = 0;
    for (const auto& l : label_by_comfort_rule(pairs, "temperature", th)) {
      positives += l.is_conflict;
    }
    EXPECT_LE(positives, previous);
    previous = positives;
  }
}

TEST(Split, ChronologicalPerUser) {
  std::vector<ServiceEvent> events;
  for (int i = 0; i < 10; ++i) {
    events.push_back(event("a" + std::to_string(i), "TV1", "A", hours(i, i + 0.5)));
  }
  for (int i = 0; i < 3; ++i) {
    events.push_back(event("b" + std::to_string(i), "TV1", "B", hours(i, i + 0.5)));
  }
  auto [train, test] = chronological_split(EventSequence(events), 0.8);
  EXPECT_EQ(train.size(), 8u + 2u);
  EXPECT_EQ(test.size(), 2u + 1u);
  for (const auto& ev : test) {
    for (const auto& tr : train) {
      if (tr.user_id == ev.user_id) {
        EXPECT_LE(tr.interval.start, ev.interval.start);
      }
    }
  }
  EXPECT_THROW(chronological_split(EventSequence(events), 1.0), Error);
  EXPECT_THROW(chronological_split(EventSequence(events), -0.1), Error);
  EXPECT_EQ(chronological_split(EventSequence(events), 0.0).second.size(), 13u);
}

EventSequence random_home(std::mt19937& rng, int n) {
  std::vector<ServiceEvent> events;
  const char* services[] = {"TV1", "AC1", "WIN1", "HEAT1", "GAME1"};
  const char* rooms[] = {"living room", "bedroom"};
  const char* channels[] = {"news", "sports"};
  for (int i = 0; i < n; ++i) {
    long long s = std::uniform_int_distribution<long long>(0, 200)(rng);
    long long len = std::uniform_int_distribution<long long>(1, 20)(rng);
    std::string svc = services[rng() % 5];
    auto ev = event("e" + std::to_string(i), svc,
                    "U" + std::to_string(rng() % 3),
                    {testing::minute_of_day(s * 5), testing::minute_of_day((s + len) * 5)},
                    rng() % 4 ? ServiceState::On : ServiceState::Off,
                    rooms[rng() % 2]);
    if (svc == "AC1") ev.quantitative_values["temperature"] = 18 + rng() % 10;
    if (svc == "TV1") ev.qualitative_values["channel"] = channels[rng() % 2];
    events.push_back(ev);
  }
  return EventSequence(events);
}

std::string serialized(const DetectionResult& r) {
  std::ostringstream out;
  write_detection(out, r);
  return out.str();
}

TEST(Pipeline, TopKWithAllServicesEqualsExhaustive) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    auto seq = random_home(rng, 150);
    PipelineOptions heuristic;
    heuristic.k = seq.service_ids().size();
    PipelineOptions exhaustive;
    exhaustive.all_services = true;
    auto h = run_pipeline(seq, home(), heuristic);
    auto e = run_pipeline(seq, home(), exhaustive);
    EXPECT_EQ(serialized(h.result), serialized(e.result));
    EXPECT_EQ(h.result.total(), e.result.total());
  }
}

TEST(Pipeline, RejectsZeroK) {
  PipelineOptions opts;
  opts.k = 0;
  EXPECT_THROW(run_pipeline(scenario_one(), home(), opts), Error);
}

}  // namespace
}  // namespace iotconflict
