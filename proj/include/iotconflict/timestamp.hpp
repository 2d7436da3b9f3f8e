#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "iotconflict/model.hpp"

namespace iotconflict {

/// Parses `YYYY-MM-DD[T| ]HH:MM[:SS[.fraction]]`. Fractional digits beyond
/// microseconds are truncated. Returns nullopt on any syntax or range error.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Parses `YYYY-MM-DD` to midnight of that day.
std::optional<Timestamp> parse_date(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SS`, with a six-digit `.ffffff` suffix only when
/// the sub-second part is non-zero. parse_timestamp inverts this exactly.
std::string format_timestamp(Timestamp t);

/// Whole and fractional seconds as a decimal number.
double to_seconds(Duration d);

}  // namespace iotconflict
