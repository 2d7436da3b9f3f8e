#include "iotconflict/timestamp.hpp"

#include <charconv>
#include <cstdio>

namespace iotconflict {
namespace {

// Reads exactly `width` decimal digits.
bool read_fixed(std::string_view& s, std::size_t width, int& out) {
  if (s.size() < width) return false;
  int value = 0;
  for (std::size_t i = 0; i < width; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  s.remove_prefix(width);
  return true;
}

bool expect(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

std::optional<std::chrono::sys_days> read_date(std::string_view& s) {
  int y = 0, m = 0, d = 0;
  if (!read_fixed(s, 4, y) || !expect(s, '-') || !read_fixed(s, 2, m) ||
      !expect(s, '-') || !read_fixed(s, 2, d)) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y},
                                  std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

}  // namespace

std::optional<Timestamp> parse_date(std::string_view text) {
  auto day = read_date(text);
  if (!day || !text.empty()) return std::nullopt;
  return Timestamp{*day};
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  auto day = read_date(text);
  if (!day) return std::nullopt;
  if (text.empty() || (text.front() != 'T' && text.front() != ' ')) {
    return std::nullopt;
  }
  text.remove_prefix(1);

  int hh = 0, mm = 0, ss = 0;
  if (!read_fixed(text, 2, hh) || !expect(text, ':') ||
      !read_fixed(text, 2, mm)) {
    return std::nullopt;
  }
  long long micros = 0;
  if (!text.empty() && text.front() == ':') {
    text.remove_prefix(1);
    if (!read_fixed(text, 2, ss)) return std::nullopt;
    if (!text.empty() && text.front() == '.') {
      text.remove_prefix(1);
      if (text.empty()) return std::nullopt;
      int digits = 0;
      while (!text.empty() && text.front() >= '0' && text.front() <= '9') {
        if (digits < 6) {
          micros = micros * 10 + (text.front() - '0');
          ++digits;
        }
        text.remove_prefix(1);
      }
      for (; digits < 6; ++digits) micros *= 10;
    }
  }
  if (!text.empty()) return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;

  using namespace std::chrono;
  return Timestamp{*day} + hours{hh} + minutes{mm} + seconds{ss} +
         microseconds{micros};
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss<Duration> tod{t - day};
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d",
                        static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()),
                        static_cast<unsigned>(ymd.day()),
                        static_cast<int>(tod.hours().count()),
                        static_cast<int>(tod.minutes().count()),
                        static_cast<int>(tod.seconds().count()));
  std::string out(buf, static_cast<std::size_t>(n));
  auto sub = tod.subseconds().count();
  if (sub != 0) {
    std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(sub));
    out += buf;
  }
  return out;
}

double to_seconds(Duration d) {
  return std::chrono::duration<double>(d).count();
}

}  // namespace iotconflict
