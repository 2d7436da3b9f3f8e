#include <gtest/gtest.h>

#include <random>

#include "iotconflict/model.hpp"
#include "iotconflict/timestamp.hpp"
#include "test_support.hpp"

namespace iotconflict {
namespace {

using testing::at;
using testing::event;
using testing::hours;

ServiceRegistry tv_registry() {
  ServiceRegistry reg;
  auto tv = testing::service("TV1");
  tv.qualitative_attrs.push_back({"channel", {"news", "sports", "movies"}});
  tv.quantitative_attrs.push_back({"volume", "dB", 0.0, 100.0});
  reg.add(tv);
  return reg;
}

TEST(CanonicalizeLocation, FoldsCaseAndSpace) {
  EXPECT_EQ(canonicalize_location("Living Room "), "living room");
  EXPECT_EQ(canonicalize_location("living room"), "living room");
  EXPECT_EQ(canonicalize_location("  KITCHEN "), "kitchen");
  EXPECT_EQ(canonicalize_location("Master\t  Bed\nRoom"), "master bed room");
}

TEST(CanonicalizeLocation, EmptyAfterTrimIsInvalid) {
  for (const char* raw : {"", "   ", "\t\n"}) {
    try {
      canonicalize_location(raw);
      FAIL() << "expected InvalidLocation for '" << raw << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidLocation);
    }
  }
}

TEST(CanonicalizeLocation, IdempotentOnRandomInput) {
  std::mt19937 rng(42);
  const std::string alphabet = "aBc Xy\t\nZ  q";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string raw;
    int len = std::uniform_int_distribution<int>(1, 20)(rng);
    for (int i = 0; i < len; ++i) {
      raw.push_back(alphabet[std::uniform_int_distribution<std::size_t>(
          0, alphabet.size() - 1)(rng)]);
    }
    std::string once;
    try {
      once = canonicalize_location(raw);
    } catch (const Error&) {
      continue;  // whitespace-only draw
    }
    EXPECT_EQ(canonicalize_location(once), once) << "raw='" << raw << "'";
  }
}

TEST(TimeInterval, HalfOpenEndpointsDoNotOverlap) {
  auto a = hours(21, 22);
  auto b = hours(22, 23);
  EXPECT_FALSE(overlaps(a, b));
  EXPECT_FALSE(overlaps(b, a));
  EXPECT_EQ(intersection_length(a, b), Duration::zero());
  EXPECT_FALSE(intersection(a, b).has_value());
}

TEST(TimeInterval, AdjacentRequestAfterEndIsNotConcurrent) {
  // AC used 9-10 pm, next request from 10:01 pm.
  auto first = TimeInterval{at("2018-06-15T21:00"), at("2018-06-15T22:00")};
  auto second = TimeInterval{at("2018-06-15T22:01"), at("2018-06-15T23:00")};
  EXPECT_FALSE(overlaps(first, second));
}

TEST(TimeInterval, RandomSharedEndpointNeverOverlaps) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long long> d(0, 1'000'000);
  for (int i = 0; i < 1000; ++i) {
    auto s = Timestamp{Duration{d(rng)}};
    auto m = s + Duration{d(rng)};
    auto e = m + Duration{d(rng)};
    EXPECT_FALSE(overlaps({s, m}, {m, e}));
  }
}

TEST(TimeInterval, MakeIntervalRejectsInverted) {
  EXPECT_NO_THROW(make_interval(at("2018-06-15T10:00"), at("2018-06-15T10:00")));
  try {
    make_interval(at("2018-06-15T11:00"), at("2018-06-15T10:00"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvertedInterval);
  }
}

TEST(ServiceRegistry, RejectsDuplicateAndInvalidDescriptors) {
  ServiceRegistry reg;
  reg.add(testing::service("A"));
  EXPECT_THROW(reg.add(testing::service("A")), Error);

  auto self_dep = testing::service("B");
  self_dep.depends_on.insert("B");
  EXPECT_THROW(reg.add(self_dep), Error);

  auto overlap_schema = testing::service("C");
  overlap_schema.qualitative_attrs.push_back({"level", {}});
  overlap_schema.quantitative_attrs.push_back({"level", "", {}, {}});
  EXPECT_THROW(reg.add(overlap_schema), Error);
  EXPECT_EQ(reg.size(), 1u);
}

TEST(ServiceRegistry, DependencyIsCheckedBothWays) {
  ServiceRegistry reg;
  auto ac = testing::service("AC1");
  ac.depends_on.insert("WIN1");
  reg.add(ac);
  reg.add(testing::service("WIN1"));
  reg.add(testing::service("TV1"));
  EXPECT_TRUE(reg.has_dependency("AC1", "WIN1"));
  EXPECT_TRUE(reg.has_dependency("WIN1", "AC1"));
  EXPECT_FALSE(reg.has_dependency("AC1", "TV1"));
}

TEST(ValidateEvent, AcceptsDeclaredAttribute) {
  auto reg = tv_registry();
  auto ev = event("e1", "TV1", "R2", hours(19.5, 20.5));
  ev.qualitative_values["channel"] = "news";
  EXPECT_EQ(validate_event(ev, reg), ev);
}

TEST(ValidateEvent, Errors) {
  auto reg = tv_registry();
  auto expect_code = [&](const ServiceEvent& ev, ErrorCode code) {
    try {
      validate_event(ev, reg);
      ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };

  auto inverted = event("e1", "TV1", "R1", hours(20, 19));
  expect_code(inverted, ErrorCode::InvertedInterval);

  auto absent = event("e2", "RADIO", "R1", hours(19, 20));
  expect_code(absent, ErrorCode::UnknownService);

  auto unknown_attr = event("e3", "TV1", "R1", hours(19, 20));
  unknown_attr.quantitative_values["brightness"] = 3;
  expect_code(unknown_attr, ErrorCode::UnknownAttribute);

  auto wrong_partition = event("e4", "TV1", "R1", hours(19, 20));
  wrong_partition.qualitative_values["volume"] = "loud";
  expect_code(wrong_partition, ErrorCode::UnknownAttribute);

  auto bad_value = event("e5", "TV1", "R1", hours(19, 20));
  bad_value.qualitative_values["channel"] = "cartoons";
  expect_code(bad_value, ErrorCode::InvalidAttributeValue);

  auto out_of_domain = event("e6", "TV1", "R1", hours(19, 20));
  out_of_domain.quantitative_values["volume"] = 120;
  expect_code(out_of_domain, ErrorCode::InvalidAttributeValue);

  auto zero_demand = event("e7", "TV1", "R1", hours(19, 20));
  zero_demand.capacity_demand = 0;
  expect_code(zero_demand, ErrorCode::InvalidArgument);

  auto raw_location = event("e8", "TV1", "R1", hours(19, 20));
  raw_location.location = "Living Room";
  expect_code(raw_location, ErrorCode::InvalidLocation);
}

TEST(EventSequence, SortsByStartThenId) {
  EventSequence seq({event("b", "TV1", "R1", hours(10, 11)),
                     event("c", "TV1", "R1", hours(9, 11)),
                     event("a", "TV1", "R1", hours(10, 12))});
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq[0].event_id, "c");
  EXPECT_EQ(seq[1].event_id, "a");
  EXPECT_EQ(seq[2].event_id, "b");
}

TEST(EventSequence, SortingTwiceIsStable) {
  std::mt19937 rng(3);
  std::vector<ServiceEvent> events;
  for (int i = 0; i < 200; ++i) {
    double s = std::uniform_int_distribution<int>(0, 20)(rng);
    events.push_back(event("e" + std::to_string(i), "TV1", "R1",
                           hours(s, s + 1)));
  }
  EventSequence once(events);
  EventSequence twice(once.events());
  EXPECT_EQ(once, twice);
  std::shuffle(events.begin(), events.end(), rng);
  EXPECT_EQ(EventSequence(events), once);
}

TEST(EventSequence, MergeRejectsDuplicateIds) {
  EventSequence a({event("x", "TV1", "R1", hours(1, 2))});
  EventSequence b({event("x", "TV1", "R2", hours(3, 4))});
  EXPECT_THROW(merge_sequences({a, b}), Error);
  EventSequence c({event("y", "TV1", "R2", hours(0, 4))});
  auto merged = merge_sequences({a, c});
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0].event_id, "y");
}

TEST(Timestamp, FormatParseRoundTrip) {
  for (const char* text :
       {"2011-06-15T13:00:00", "2011-06-15T13:00:00.000001",
        "1999-12-31T23:59:59.999999", "2020-02-29T00:00:00.5"}) {
    auto t = parse_timestamp(text);
    ASSERT_TRUE(t) << text;
    EXPECT_EQ(parse_timestamp(format_timestamp(*t)), t) << text;
  }
  EXPECT_EQ(format_timestamp(*parse_timestamp("2020-02-29 00:00:00.5")),
            "2020-02-29T00:00:00.500000");
}

TEST(Timestamp, TruncatesBeyondMicroseconds) {
  auto t = parse_timestamp("2011-06-15 13:00:00.1234567");
  ASSERT_TRUE(t);
  EXPECT_EQ(format_timestamp(*t), "2011-06-15T13:00:00.123456");
  auto u = parse_timestamp("2011-06-15 13:00:00.9999999");
  EXPECT_EQ(format_timestamp(*u), "2011-06-15T13:00:00.999999");
}

TEST(Timestamp, RejectsGarbage) {
  for (const char* text : {"2011-06-15", "2011-13-01 00:00", "2011-02-30 00:00",
                           "2011-06-15 25:00", "2011-06-15 10:00:00.",
                           "2011-06-15 10:00x", "today"}) {
    EXPECT_FALSE(parse_timestamp(text).has_value()) << text;
  }
}

}  // namespace
}  // namespace iotconflict
