#pragma once

// Extraction of a numeric sequence from free-form model replies.
//
// The text is split into tokens on whitespace, commas and semicolons. Number
// tokens accumulate into a run; a word, a bracket, or a blank line ends the
// run. The answer is the longest run, the last one on ties, since models tend
// to restate the input before answering.

#include <algorithm>
#include <charconv>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skipzip/core.hpp"

namespace skipzip {

inline constexpr double kBandLow = -0.5;
inline constexpr double kBandHigh = 1.5;

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

/// [+-]? (digits [. digits*]? | . digits) ([eE] [+-]? digits)?
inline std::optional<double> parse_number_token(std::string_view tok) {
  std::size_t i = 0;
  const std::size_t n = tok.size();
  if (i < n && (tok[i] == '+' || tok[i] == '-')) ++i;
  const std::size_t mantissa_begin = i;
  std::size_t int_digits = 0, frac_digits = 0;
  while (i < n && is_digit(tok[i])) ++i, ++int_digits;
  if (i < n && tok[i] == '.') {
    ++i;
    while (i < n && is_digit(tok[i])) ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (i < n && (tok[i] == 'e' || tok[i] == 'E')) {
    ++i;
    if (i < n && (tok[i] == '+' || tok[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < n && is_digit(tok[i])) ++i, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
  }
  if (i != n) return std::nullopt;

  // from_chars rejects a leading '+', and a bare leading '.' needs a zero.
  std::string buf;
  if (tok[0] == '-') buf += '-';
  if (tok[mantissa_begin] == '.') buf += '0';
  buf.append(tok.substr(mantissa_begin));
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{} || ptr != buf.data() + buf.size()) return std::nullopt;
  return v;
}

inline bool is_bracket(char c) {
  return c == '[' || c == ']' || c == '(' || c == ')' || c == '{' || c == '}' || c == '<' || c == '>';
}
inline bool is_separator(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == ',' || c == ';' || c == '`' || c == '"' || c == '\'';
}

/// Length of a leading list marker such as "1. ", "2) ", "- ", "* " or 0.
inline std::size_t list_marker_length(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t j = i;
  if (j < line.size() && (line[j] == '-' || line[j] == '*' || line[j] == '+')) {
    ++j;
  } else {
    while (j < line.size() && is_digit(line[j])) ++j;
    if (j == i || j >= line.size() || (line[j] != '.' && line[j] != ')')) return 0;
    ++j;
  }
  if (j < line.size() && (line[j] == ' ' || line[j] == '\t')) return j + 1;
  return 0;
}

/// Strips markdown emphasis and sentence punctuation around a token.
inline std::string_view trim_token(std::string_view tok) {
  while (!tok.empty() && tok.front() == '*') tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == '*' || tok.back() == '.' || tok.back() == ':' ||
                          tok.back() == '!' || tok.back() == '?'))
    tok.remove_suffix(1);
  return tok;
}

}  // namespace detail

/// All maximal runs of consecutive number tokens, in order of appearance.
inline std::vector<std::vector<double>> find_runs(std::string_view text) {
  std::vector<std::vector<double>> runs;
  std::vector<double> current;
  auto flush = [&] {
    if (!current.empty()) runs.push_back(std::move(current));
    current.clear();
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;

    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      flush();
      continue;
    }
    line.remove_prefix(detail::list_marker_length(line));

    std::size_t i = 0;
    while (i < line.size()) {
      const char c = line[i];
      if (detail::is_separator(c)) {
        ++i;
        continue;
      }
      if (detail::is_bracket(c)) {
        flush();
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < line.size() && !detail::is_separator(line[j]) && !detail::is_bracket(line[j])) ++j;
      const std::string_view raw = line.substr(i, j - i);
      i = j;
      const auto tok = detail::trim_token(raw);
      if (auto v = detail::parse_number_token(tok)) {
        current.push_back(*v);
        // "0.5." closes a sentence, and with it the run.
        if (raw.size() > tok.size() && raw.back() != '*') flush();
      } else {
        flush();
      }
    }
  }
  flush();
  return runs;
}

/// Longest run, the last one among equals. Empty when the text has no numbers.
inline std::vector<double> longest_run(std::string_view text) {
  auto runs = find_runs(text);
  std::vector<double> best;
  for (auto& r : runs)
    if (r.size() >= best.size()) best = std::move(r);
  return best;
}

inline std::vector<double> parse_sequence(std::string_view text, std::size_t expected_length) {
  auto run = longest_run(text);
  if (run.empty()) throw Error(Errc::NoNumbersFound, "reply contains no numbers");
  if (run.size() != expected_length) throw Error::length_mismatch(run.size(), expected_length);
  for (std::size_t i = 0; i < run.size(); ++i)
    if (!(run[i] >= kBandLow && run[i] <= kBandHigh)) throw Error::out_of_band(i, run[i]);
  return run;
}

inline std::vector<double> clamp_to_unit(std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [](double v) { return std::clamp(v, 0.0, 1.0); });
  return out;
}

}  // namespace skipzip
