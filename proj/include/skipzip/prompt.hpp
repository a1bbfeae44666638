#pragma once

// Prompt rendering for LLM reconstruction. A template has a system part and a
// user part with {slot} placeholders; the no-preamble directive is always
// appended to the user text after rendering.

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "skipzip/codec.hpp"
#include "skipzip/format.hpp"

namespace skipzip {

inline constexpr std::string_view kNoPreambleDirective =
    "Do not say anything like 'the decompressed sequence is', just return the decompressed sequence.";

inline constexpr std::array<std::string_view, 5> kRequiredSlots = {"sensor", "mode", "alpha", "n_total",
                                                                   "sequence"};
inline constexpr std::array<std::string_view, 2> kOptionalSlots = {"unit", "n_kept"};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::size_t expected_length = 0;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

namespace detail {

struct SlotRef {
  std::size_t begin;  // position of '{'
  std::size_t end;    // one past '}'
  std::string name;
};

inline bool is_slot_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

inline std::vector<SlotRef> find_slots(std::string_view text) {
  std::vector<SlotRef> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_slot_char(text[j])) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      out.push_back({i, j + 1, std::string(text.substr(i + 1, j - i - 1))});
      i = j;
    }
  }
  return out;
}

inline bool known_slot(std::string_view name) {
  return std::find(kRequiredSlots.begin(), kRequiredSlots.end(), name) != kRequiredSlots.end() ||
         std::find(kOptionalSlots.begin(), kOptionalSlots.end(), name) != kOptionalSlots.end();
}

}  // namespace detail

class PromptTemplate {
 public:
  /// Validates slots: every required slot must occur in the user part and no
  /// unknown slot may occur anywhere.
  PromptTemplate(std::string system_text, std::string user_text)
      : system_(std::move(system_text)), user_(std::move(user_text)) {
    for (const auto* part : {&system_, &user_})
      for (const auto& s : detail::find_slots(*part))
        if (!detail::known_slot(s.name)) throw Error(Errc::TemplateSlotUnknown, "{" + s.name + "}");
    const auto user_slots = detail::find_slots(user_);
    for (auto req : kRequiredSlots) {
      const bool present = std::any_of(user_slots.begin(), user_slots.end(),
                                       [&](const detail::SlotRef& s) { return s.name == req; });
      if (!present) throw Error(Errc::TemplateSlotMissing, "{" + std::string(req) + "}");
    }
  }

  /// Template file format: system text, a line consisting of "---", user
  /// text. Without the separator line the whole file is the user part and
  /// the default system text is used.
  static PromptTemplate parse(std::string_view text);
  static PromptTemplate load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot read template " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  const std::string& system_text() const noexcept { return system_; }
  const std::string& user_text() const noexcept { return user_; }

 private:
  std::string system_;
  std::string user_;
};

inline const char* kDefaultSystemText =
    "You are an expert in transportation sensor data. You know how {sensor} readings recorded on "
    "buses, taxis and metro trains evolve over time, including typical acceleration, braking, "
    "gradient and pressure patterns.";

inline const char* kDefaultUserText =
    "A smartphone mounted inside a {mode} recorded a sequence of {n_total} {sensor} readings ({unit}) "
    "at a fixed sampling rate. To save bandwidth the sequence was compressed before transmission: "
    "only a fraction {alpha} of the readings was kept ({n_kept} evenly spaced samples, always "
    "including the first and the last), the kept readings were rescaled to the range 0 to 1 using "
    "their minimum and maximum, and truncated to two decimal places.\n"
    "Compressed sequence: {sequence}\n"
    "Using your knowledge of how {sensor} data behaves on a {mode}, reason step by step about which "
    "readings are missing and estimate them from the neighbouring known values. Then decompress the "
    "sequence into all {n_total} readings, on the same 0 to 1 scale with two decimal places, "
    "as a comma-separated list in square brackets.";

inline PromptTemplate default_template() { return PromptTemplate(kDefaultSystemText, kDefaultUserText); }

inline PromptTemplate PromptTemplate::parse(std::string_view text) {
  std::string system;
  std::string user;
  bool split = false;
  std::size_t pos = 0;
  std::string* target = &system;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!split && line == "---") {
      split = true;
      target = &user;
    } else {
      if (!target->empty()) *target += '\n';
      *target += line;
    }
    pos = nl + 1;
  }
  auto trim = [](std::string& s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
    while (!s.empty() && (s.front() == '\n' || s.front() == ' ')) s.erase(s.begin());
  };
  if (!split) {
    user = std::move(system);
    system = kDefaultSystemText;
  }
  trim(system);
  trim(user);
  return PromptTemplate(std::move(system), std::move(user));
}

namespace detail {

inline std::string render(std::string_view text, const CompressedSegment& cs) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& s : find_slots(text)) {
    out.append(text.substr(pos, s.begin - pos));
    if (s.name == "sensor") out += to_string(cs.sensor);
    else if (s.name == "mode") out += to_string(cs.mode);
    else if (s.name == "alpha") out += shortest(cs.alpha);
    else if (s.name == "n_total") out += std::to_string(cs.n_total);
    else if (s.name == "sequence") out += render_sequence(cs.values_scaled);
    else if (s.name == "unit") out += unit_of(cs.sensor);
    else if (s.name == "n_kept") out += std::to_string(cs.values_scaled.size());
    pos = s.end;
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace detail

inline PromptBundle build_prompt(const CompressedSegment& cs, const PromptTemplate& tpl) {
  PromptBundle b;
  b.system_text = detail::render(tpl.system_text(), cs);
  b.user_text = detail::render(tpl.user_text(), cs);
  b.user_text += "\n";
  b.user_text += kNoPreambleDirective;
  b.expected_length = cs.n_total;
  return b;
}

/// Follow-up instruction used once when a reply could not be parsed.
inline std::string corrective_suffix(std::size_t n_total) {
  return "Return exactly " + std::to_string(n_total) + " numbers, comma-separated, nothing else.";
}

inline PromptBundle with_correction(PromptBundle b) {
  b.user_text += "\n";
  b.user_text += corrective_suffix(b.expected_length);
  return b;
}

}  // namespace skipzip
