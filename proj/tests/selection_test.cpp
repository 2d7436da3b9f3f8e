#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "iotconflict/selection.hpp"
#include "test_support.hpp"

namespace iotconflict {
namespace {

using testing::event;
using testing::hours;

EventSequence light_example() {
  return EventSequence({event("a1", "light", "A", hours(13, 15)),
                        event("a2", "light", "A", hours(18, 20)),
                        event("b1", "light", "B", hours(14, 16)),
                        event("b2", "light", "B", hours(16, 19))});
}

std::set<std::pair<std::string, std::string>> keys_of(
    const std::vector<OverlapPair>& pairs) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& p : pairs) {
    auto a = p.first.event_id, b = p.second.event_id;
    if (b < a) std::swap(a, b);
    out.emplace(a, b);
  }
  return out;
}

TEST(ClusterByLocation, GroupsServicesPerRoom) {
  EventSequence seq({event("1", "TV", "A", hours(1, 2)),
                     event("2", "DVD", "A", hours(3, 4)),
                     event("3", "lamp", "A", hours(1, 2), ServiceState::On,
                           "bedroom"),
                     event("4", "lamp", "B", hours(5, 6)),
                     event("5", "TV", "B", hours(7, 8))});
  auto clusters = cluster_by_location(seq);
  EXPECT_EQ(clusters.at("living room"),
            (std::vector<std::string>{"TV", "DVD", "lamp"}));
  EXPECT_EQ(clusters.at("bedroom"), (std::vector<std::string>{"lamp"}));
  EXPECT_TRUE(cluster_by_location(EventSequence{}).empty());
}

EventSequence usage(const std::string& id, int count, double total_hours,
                    int offset) {
  std::vector<ServiceEvent> out;
  double each = total_hours / count;
  for (int i = 0; i < count; ++i) {
    out.push_back(event(id + std::to_string(i), id, "U",
                        hours(offset + i * 0.001, offset + i * 0.001 + each)));
  }
  return EventSequence(out);
}

TEST(RankServices, TieOnRankSumBreaksById) {
  // A: count rank 1, duration rank 2. B: count rank 2, duration rank 1.
  auto seq = merge_sequences({usage("B", 3, 9, 0), usage("A", 10, 5, 0)});
  auto ranked = rank_services(seq);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].service_id, "A");
  EXPECT_EQ(ranked[1].service_id, "B");
  EXPECT_EQ(ranked[0].use_count, 10u);
  EXPECT_NEAR(ranked[1].total_seconds(), 9 * 3600.0, 1.0);
}

TEST(RankServices, DominanceAndSingleService) {
  auto seq = merge_sequences({usage("B", 3, 5, 0), usage("A", 10, 9, 0)});
  auto ranked = rank_services(seq);
  EXPECT_EQ(ranked[0].service_id, "A");
  EXPECT_EQ(ranked[1].service_id, "B");

  auto one = rank_services(usage("Z", 2, 1, 0));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].service_id, "Z");
  EXPECT_EQ(one[0].location, "living room");
}

TEST(RankServices, DominatedServiceNeverAhead) {
  auto seq = merge_sequences({usage("C", 2, 1, 0), usage("B", 5, 3, 0),
                              usage("A", 9, 8, 0)});
  auto ranked = rank_services(seq);
  EXPECT_EQ(ranked[0].service_id, "A");
  EXPECT_EQ(ranked[1].service_id, "B");
  EXPECT_EQ(ranked[2].service_id, "C");
}

TEST(RankServices, PermutationInvariant) {
  std::mt19937 rng(99);
  std::vector<ServiceEvent> events;
  for (int i = 0; i < 300; ++i) {
    double s = std::uniform_real_distribution<double>(0, 20)(rng);
    double len = std::uniform_real_distribution<double>(0, 3)(rng);
    events.push_back(event("e" + std::to_string(i),
                           "S" + std::to_string(rng() % 12), "U",
                           hours(s, s + len)));
  }
  auto base = rank_services(EventSequence(events));
  for (int t = 0; t < 20; ++t) {
    std::shuffle(events.begin(), events.end(), rng);
    auto again = rank_services(EventSequence(events));
    ASSERT_EQ(again.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_EQ(again[i].service_id, base[i].service_id);
    }
  }
}

std::vector<UsageStats> ranked_ids(int n) {
  std::vector<UsageStats> out;
  for (int i = 0; i < n; ++i) {
    UsageStats s;
    s.service_id = "S" + std::to_string(i);
    s.use_count = 1;
    out.push_back(s);
  }
  return out;
}

TEST(SelectTopK, TakesFirstMinNK) {
  auto ten = ranked_ids(10);
  auto seven = select_top_k(ten);
  EXPECT_EQ(seven.size(), 7u);
  for (int i = 0; i < 7; ++i) EXPECT_TRUE(seven.count("S" + std::to_string(i)));
  EXPECT_EQ(select_top_k(ranked_ids(3), 7).size(), 3u);
  EXPECT_EQ(select_top_k(ten, 1), (std::set<std::string>{"S0"}));
  EXPECT_THROW(select_top_k(ten, 0), Error);
}

TEST(IntervalSets, LightExample) {
  auto sets = interval_sets(light_example(), {"light", "fan"});
  auto got = sets.at("light");
  std::sort(got.begin(), got.end());
  std::vector<TimeInterval> want{hours(13, 15), hours(14, 16), hours(16, 19),
                                 hours(18, 20)};
  EXPECT_EQ(got, want);
  EXPECT_TRUE(sets["fan"].empty());

  auto single = interval_sets(
      EventSequence({event("x", "fan", "A", hours(1, 2))}), {"fan"});
  EXPECT_EQ(single.at("fan"), std::vector<TimeInterval>{hours(1, 2)});
}

TEST(AllenRelation, Examples) {
  EXPECT_EQ(allen_relation(hours(1, 3), hours(2, 4)), AllenRelation::Overlaps);
  EXPECT_EQ(allen_relation(hours(1, 3), hours(3, 5)), AllenRelation::Meets);
  EXPECT_FALSE(is_overlap_positive(AllenRelation::Meets));
  EXPECT_EQ(allen_relation(hours(2, 3), hours(1, 5)), AllenRelation::During);
  EXPECT_EQ(to_string(AllenRelation::OverlappedBy), "overlapped-by");
}

TEST(AllenRelation, AgreesWithTextbookPredicates) {
  for (long long a1 = 0; a1 < 6; ++a1)
    for (long long a2 = a1 + 1; a2 <= 6; ++a2)
      for (long long b1 = 0; b1 < 6; ++b1)
        for (long long b2 = b1 + 1; b2 <= 6; ++b2) {
          auto hold = testing::allen_predicates(a1, a2, b1, b2);
          ASSERT_EQ(hold.size(), 1u);
          TimeInterval a{Timestamp{Duration{a1}}, Timestamp{Duration{a2}}};
          TimeInterval b{Timestamp{Duration{b1}}, Timestamp{Duration{b2}}};
          auto r = allen_relation(a, b);
          EXPECT_EQ(to_string(r), hold[0]);
          EXPECT_EQ(allen_relation(b, a), inverse(r));
          EXPECT_EQ(is_overlap_positive(r), intersection_length(a, b) > Duration::zero());
        }
}

TEST(AllenRelation, DegenerateIntervalsAreTotalAndInverse) {
  for (long long a1 = 0; a1 <= 4; ++a1)
    for (long long a2 = a1; a2 <= 4; ++a2)
      for (long long b1 = 0; b1 <= 4; ++b1)
        for (long long b2 = b1; b2 <= 4; ++b2) {
          TimeInterval a{Timestamp{Duration{a1}}, Timestamp{Duration{a2}}};
          TimeInterval b{Timestamp{Duration{b1}}, Timestamp{Duration{b2}}};
          auto r = allen_relation(a, b);
          EXPECT_EQ(allen_relation(b, a), inverse(r));
          EXPECT_EQ(inverse(inverse(r)), r);
        }
}

TEST(FindOverlaps, LightExampleMatchesPairwiseOracle) {
  auto seq = light_example();
  auto pairs = find_overlaps(seq, {"light"});
  auto oracle = testing::brute_force_pair_keys(seq.events(), {"light"});
  // The pairwise check yields two pairs: a1/b1 over [14,15) and b2/a2 over
  // [18,19). b1 and b2 only share the endpoint 16 and are by one user.
  ASSERT_EQ(oracle.size(), 2u);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(keys_of(pairs), oracle);
  EXPECT_EQ(pairs[0].first.event_id, "a1");
  EXPECT_EQ(pairs[0].second.event_id, "b1");
  EXPECT_EQ(pairs[0].overlap, hours(14, 15));
  EXPECT_EQ(pairs[0].relation, AllenRelation::Overlaps);
  EXPECT_EQ(pairs[1].first.event_id, "b2");
  EXPECT_EQ(pairs[1].second.event_id, "a2");
  EXPECT_EQ(pairs[1].overlap, hours(18, 19));
  EXPECT_FALSE(keys_of(pairs).count({"b1", "b2"}));
}

TEST(FindOverlaps, PreconditionsFilterPairs) {
  EventSequence same_user({event("1", "TV", "A", hours(1, 3)),
                           event("2", "TV", "A", hours(2, 4))});
  EXPECT_TRUE(find_overlaps(same_user, {"TV"}).empty());

  EventSequence two_rooms({event("1", "TV", "A", hours(1, 3)),
                           event("2", "TV", "B", hours(1, 3), ServiceState::On,
                                 "bedroom")});
  EXPECT_TRUE(find_overlaps(two_rooms, {"TV"}).empty());

  EventSequence cross({event("1", "TV", "A", hours(1, 3)),
                       event("2", "DVD", "B", hours(2, 4))});
  EXPECT_EQ(find_overlaps(cross, {"TV", "DVD"}).size(), 1u);
  EXPECT_TRUE(find_overlaps(cross, {"TV"}).empty());
}

TEST(FindOverlaps, MinimumOverlapIsExclusive) {
  EventSequence seq({event("1", "TV", "A", hours(1, 3)),
                     event("2", "TV", "B", hours(2, 4))});
  EXPECT_EQ(find_overlaps(seq, {"TV"}, std::chrono::minutes{59}).size(), 1u);
  EXPECT_TRUE(find_overlaps(seq, {"TV"}, std::chrono::minutes{60}).empty());
}

std::vector<ServiceEvent> random_events(std::mt19937& rng, int n) {
  std::vector<ServiceEvent> events;
  const char* rooms[] = {"living room", "kitchen", "bedroom"};
  for (int i = 0; i < n; ++i) {
    // Coarse grid so shared endpoints and equal intervals are common.
    long long s = std::uniform_int_distribution<long long>(0, 96)(rng);
    long long len = std::uniform_int_distribution<long long>(0, 12)(rng);
    events.push_back(event("e" + std::to_string(i),
                           "S" + std::to_string(rng() % 5),
                           "U" + std::to_string(rng() % 4),
                           {testing::minute_of_day(s * 15),
                            testing::minute_of_day((s + len) * 15)},
                           ServiceState::On, rooms[rng() % 3]));
  }
  return events;
}

TEST(FindOverlaps, SweepEqualsBruteForce) {
  std::mt19937 rng(2024);
  const std::set<std::string> all{"S0", "S1", "S2", "S3", "S4"};
  for (int trial = 0; trial < 60; ++trial) {
    int n = std::uniform_int_distribution<int>(0, 500)(rng);
    auto events = random_events(rng, n);
    EventSequence seq(events);
    auto pairs = find_overlaps(seq, all);
    EXPECT_EQ(keys_of(pairs), testing::brute_force_pair_keys(events, all));
    EXPECT_EQ(keys_of(pairs).size(), pairs.size());
    EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end(), pair_before));
    for (const auto& p : pairs) {
      EXPECT_EQ(p.first.location, p.second.location);
      EXPECT_NE(p.first.user_id, p.second.user_id);
      EXPECT_GT(p.overlap.length(), Duration::zero());
      EXPECT_LE(p.first.interval.start, p.second.interval.start);
      EXPECT_EQ(p.relation, allen_relation(p.first.interval, p.second.interval));
    }
  }
}

TEST(FindOverlaps, LargerSelectionIsSuperset) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    EventSequence seq(random_events(rng, 200));
    auto ranked = rank_services(seq);
    auto full = keys_of(find_overlaps(seq, select_top_k(ranked, ranked.size())));
    for (std::size_t k = 1; k < ranked.size(); ++k) {
      auto part = keys_of(find_overlaps(seq, select_top_k(ranked, k)));
      EXPECT_TRUE(std::includes(full.begin(), full.end(), part.begin(), part.end()));
    }
  }
}

}  // namespace
}  // namespace iotconflict
