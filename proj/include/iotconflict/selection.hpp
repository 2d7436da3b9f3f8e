#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "iotconflict/model.hpp"

namespace iotconflict {

/// The thirteen Allen relations, read as "a <relation> b".
enum class AllenRelation {
  Before,
  Meets,
  Overlaps,
  Starts,
  During,
  Finishes,
  Equals,
  After,
  MetBy,
  OverlappedBy,
  StartedBy,
  Contains,
  FinishedBy,
};

inline constexpr std::size_t kAllenRelationCount = 13;

std::string_view to_string(AllenRelation r);
AllenRelation inverse(AllenRelation r);

/// Relations under which two proper intervals share a positive-length
/// stretch of time.
bool is_overlap_positive(AllenRelation r);

/// Classifies by endpoint comparison. Exactly one relation holds for any
/// pair of proper (start < end) intervals; zero-length intervals still get a
/// deterministic answer, but overlap positivity is only meaningful for proper
/// intervals.
AllenRelation allen_relation(const TimeInterval& a, const TimeInterval& b);

/// Services per location, in order of first appearance.
std::map<std::string, std::vector<std::string>> cluster_by_location(
    const EventSequence& seq);

struct UsageStats {
  std::string service_id;
  std::string location;  // location with the most events (ties: smallest)
  std::size_t use_count = 0;
  Duration total_duration{};

  double total_seconds() const;
};

/// Ranks services by rank(use_count) + rank(total_duration), both descending
/// with competition ranking (1 = most used, ties share a rank). Lower sums
/// come first; equal sums fall back to service_id.
std::vector<UsageStats> rank_services(const EventSequence& seq);

inline constexpr std::size_t kDefaultTopK = 7;

/// First min(n, k) ranked services. InvalidArgument when k < 1.
std::set<std::string> select_top_k(const std::vector<UsageStats>& ranked,
                                   std::size_t k = kDefaultTopK);

/// Intervals of every event of each selected service, in sequence order.
std::map<std::string, std::vector<TimeInterval>> interval_sets(
    const EventSequence& seq, const std::set<std::string>& selected);

/// Two events that meet the conflict preconditions: same location, different
/// users, positive-length temporal intersection.
struct OverlapPair {
  ServiceEvent first;   // earlier start (ties: smaller event_id)
  ServiceEvent second;
  AllenRelation relation = AllenRelation::Overlaps;  // first vs second
  TimeInterval overlap;

  const std::string& location() const { return first.location; }
  bool same_service() const { return first.service_id == second.service_id; }
};

/// Builds the pair in canonical order. The caller guarantees the
/// preconditions.
OverlapPair make_overlap_pair(const ServiceEvent& a, const ServiceEvent& b);

/// Ordering used for pair lists: (location, overlap.start, first.event_id,
/// second.event_id).
bool pair_before(const OverlapPair& a, const OverlapPair& b);

/// Candidate pairs among events of `selected` services, found with a
/// per-location sweep over interval endpoints. Pairs across different
/// services are included. Only intersections longer than `min_overlap` count.
std::vector<OverlapPair> find_overlaps(const EventSequence& seq,
                                       const std::set<std::string>& selected,
                                       Duration min_overlap = Duration::zero());

}  // namespace iotconflict
