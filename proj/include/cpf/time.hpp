#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace cpf {

using Millis = std::chrono::milliseconds;
/// UTC instant at millisecond precision.
using Timestamp = std::chrono::sys_time<Millis>;

/// Parses an RFC 3339 timestamp ("2024-03-01T12:00:00Z", "...T12:00:00.250+02:00").
/// Offsets are folded into UTC; sub-millisecond digits are truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

/// Canonical UTC rendering: "YYYY-MM-DDTHH:MM:SSZ", with ".mmm" only when the
/// millisecond part is nonzero.
std::string format_rfc3339(Timestamp ts);

/// Parses "<integer><unit>" with unit in {ms, s, m, h, d}, e.g. "1h", "90m".
std::optional<Millis> parse_duration(std::string_view text);
std::string format_duration(Millis d);

inline double to_minutes(Millis d) { return static_cast<double>(d.count()) / 60'000.0; }
inline double to_hours(Millis d) { return static_cast<double>(d.count()) / 3'600'000.0; }

}  // namespace cpf
