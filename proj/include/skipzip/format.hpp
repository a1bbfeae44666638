#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>

#include "skipzip/codec.hpp"

namespace skipzip {

/// Exactly two decimals, e.g. "0.65".
inline std::string fixed2(double v) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf, static_cast<std::size_t>(n));
  if (s == "-0.00") s = "0.00";
  return s;
}

/// Shortest text that parses back to the same double.
inline std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buf, end);
}

/// Whole-string parse; nullopt on trailing garbage.
inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Two decimals for values on the 0.01 grid, shortest round-trip otherwise.
inline std::string grid_or_shortest(double v) { return on_grid2(v) ? fixed2(v) : shortest(v); }

/// "[0.00, 0.65, 1.00]": the sequence format used in prompts and expected in
/// replies.
inline std::string render_sequence(std::span<const double> values,
                                   std::string (*fmt)(double) = &fixed2) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fmt(values[i]);
  }
  out += "]";
  return out;
}

}  // namespace skipzip
