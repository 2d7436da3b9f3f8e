#include "iotconflict/selection.hpp"

#include <algorithm>
#include <unordered_map>

#include "iotconflict/timestamp.hpp"

namespace iotconflict {

std::string_view to_string(AllenRelation r) {
  switch (r) {
    case AllenRelation::Before: return "before";
    case AllenRelation::Meets: return "meets";
    case AllenRelation::Overlaps: return "overlaps";
    case AllenRelation::Starts: return "starts";
    case AllenRelation::During: return "during";
    case AllenRelation::Finishes: return "finishes";
    case AllenRelation::Equals: return "equals";
    case AllenRelation::After: return "after";
    case AllenRelation::MetBy: return "met-by";
    case AllenRelation::OverlappedBy: return "overlapped-by";
    case AllenRelation::StartedBy: return "started-by";
    case AllenRelation::Contains: return "contains";
    case AllenRelation::FinishedBy: return "finished-by";
  }
  return "equals";
}

AllenRelation inverse(AllenRelation r) {
  switch (r) {
    case AllenRelation::Before: return AllenRelation::After;
    case AllenRelation::Meets: return AllenRelation::MetBy;
    case AllenRelation::Overlaps: return AllenRelation::OverlappedBy;
    case AllenRelation::Starts: return AllenRelation::StartedBy;
    case AllenRelation::During: return AllenRelation::Contains;
    case AllenRelation::Finishes: return AllenRelation::FinishedBy;
    case AllenRelation::Equals: return AllenRelation::Equals;
    case AllenRelation::After: return AllenRelation::Before;
    case AllenRelation::MetBy: return AllenRelation::Meets;
    case AllenRelation::OverlappedBy: return AllenRelation::Overlaps;
    case AllenRelation::StartedBy: return AllenRelation::Starts;
    case AllenRelation::Contains: return AllenRelation::During;
    case AllenRelation::FinishedBy: return AllenRelation::Finishes;
  }
  return r;
}

bool is_overlap_positive(AllenRelation r) {
  switch (r) {
    case AllenRelation::Before:
    case AllenRelation::Meets:
    case AllenRelation::After:
    case AllenRelation::MetBy:
      return false;
    default:
      return true;
  }
}

AllenRelation allen_relation(const TimeInterval& a, const TimeInterval& b) {
  // Disjoint and touching cases first so that zero-length intervals at a
  // boundary classify as meets/met-by rather than starts/finishes.
  if (a.end < b.start) return AllenRelation::Before;
  if (b.end < a.start) return AllenRelation::After;
  if (a.end == b.start && a != b) return AllenRelation::Meets;
  if (b.end == a.start && a != b) return AllenRelation::MetBy;

  if (a.start == b.start) {
    if (a.end == b.end) return AllenRelation::Equals;
    return a.end < b.end ? AllenRelation::Starts : AllenRelation::StartedBy;
  }
  if (a.end == b.end) {
    return a.start > b.start ? AllenRelation::Finishes
                             : AllenRelation::FinishedBy;
  }
  if (a.start < b.start) {
    return a.end < b.end ? AllenRelation::Overlaps : AllenRelation::Contains;
  }
  return a.end < b.end ? AllenRelation::During : AllenRelation::OverlappedBy;
}

std::map<std::string, std::vector<std::string>> cluster_by_location(
    const EventSequence& seq) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& ev : seq) {
    auto& services = out[ev.location];
    if (std::find(services.begin(), services.end(), ev.service_id) ==
        services.end()) {
      services.push_back(ev.service_id);
    }
  }
  return out;
}

double UsageStats::total_seconds() const { return to_seconds(total_duration); }

namespace {

// Competition ranks ("1224") for a descending key.
template <typename Key>
std::vector<std::size_t> descending_ranks(const std::vector<UsageStats>& stats,
                                          Key key) {
  std::vector<std::size_t> order(stats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return key(stats[a]) > key(stats[b]);
  });
  std::vector<std::size_t> rank(stats.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos > 0 && key(stats[order[pos]]) == key(stats[order[pos - 1]])) {
      rank[order[pos]] = rank[order[pos - 1]];
    } else {
      rank[order[pos]] = pos + 1;
    }
  }
  return rank;
}

}  // namespace

std::vector<UsageStats> rank_services(const EventSequence& seq) {
  std::map<std::string, UsageStats> by_service;
  std::map<std::string, std::map<std::string, std::size_t>> location_counts;
  for (const auto& ev : seq) {
    auto& s = by_service[ev.service_id];
    s.service_id = ev.service_id;
    s.use_count += 1;
    s.total_duration += ev.interval.length();
    location_counts[ev.service_id][ev.location] += 1;
  }

  std::vector<UsageStats> stats;
  stats.reserve(by_service.size());
  for (auto& [id, s] : by_service) {
    std::size_t best = 0;
    for (const auto& [loc, n] : location_counts[id]) {
      if (n > best) {
        best = n;
        s.location = loc;
      }
    }
    stats.push_back(std::move(s));
  }

  auto by_count = descending_ranks(
      stats, [](const UsageStats& s) { return s.use_count; });
  auto by_time = descending_ranks(
      stats, [](const UsageStats& s) { return s.total_duration; });

  std::vector<std::size_t> order(stats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto sa = by_count[a] + by_time[a];
    auto sb = by_count[b] + by_time[b];
    if (sa != sb) return sa < sb;
    return stats[a].service_id < stats[b].service_id;
  });

  std::vector<UsageStats> ranked;
  ranked.reserve(stats.size());
  for (auto i : order) ranked.push_back(std::move(stats[i]));
  return ranked;
}

std::set<std::string> select_top_k(const std::vector<UsageStats>& ranked,
                                   std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::set<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    out.insert(ranked[i].service_id);
  }
  return out;
}

std::map<std::string, std::vector<TimeInterval>> interval_sets(
    const EventSequence& seq, const std::set<std::string>& selected) {
  std::map<std::string, std::vector<TimeInterval>> out;
  for (const auto& id : selected) out[id];
  for (const auto& ev : seq) {
    auto it = out.find(ev.service_id);
    if (it != out.end()) it->second.push_back(ev.interval);
  }
  return out;
}

OverlapPair make_overlap_pair(const ServiceEvent& a, const ServiceEvent& b) {
  const bool swap = event_before(b, a);
  const auto& first = swap ? b : a;
  const auto& second = swap ? a : b;
  OverlapPair p;
  p.first = first;
  p.second = second;
  p.relation = allen_relation(first.interval, second.interval);
  p.overlap = intersection(first.interval, second.interval)
                  .value_or(TimeInterval{second.interval.start,
                                         second.interval.start});
  return p;
}

bool pair_before(const OverlapPair& a, const OverlapPair& b) {
  if (a.location() != b.location()) return a.location() < b.location();
  if (a.overlap.start != b.overlap.start) {
    return a.overlap.start < b.overlap.start;
  }
  if (a.first.event_id != b.first.event_id) {
    return a.first.event_id < b.first.event_id;
  }
  return a.second.event_id < b.second.event_id;
}

std::vector<OverlapPair> find_overlaps(const EventSequence& seq,
                                       const std::set<std::string>& selected,
                                       Duration min_overlap) {
  // The sequence is already ordered by (start, event_id), so each location's
  // bucket is too.
  std::map<std::string, std::vector<const ServiceEvent*>> by_location;
  for (const auto& ev : seq) {
    if (ev.interval.empty() || !selected.count(ev.service_id)) continue;
    by_location[ev.location].push_back(&ev);
  }

  std::vector<OverlapPair> out;
  for (const auto& [location, events] : by_location) {
    // Active events keyed by end time; anything ending at or before the
    // current start cannot intersect it (half-open intervals).
    std::multimap<Timestamp, const ServiceEvent*> active;
    for (const auto* ev : events) {
      active.erase(active.begin(), active.upper_bound(ev->interval.start));
      for (const auto& [end, other] : active) {
        if (other->user_id == ev->user_id) continue;
        if (intersection_length(other->interval, ev->interval) <= min_overlap)
          continue;
        out.push_back(make_overlap_pair(*other, *ev));
      }
      active.emplace(ev->interval.end, ev);
    }
  }
  std::sort(out.begin(), out.end(), pair_before);
  return out;
}

}  // namespace iotconflict
