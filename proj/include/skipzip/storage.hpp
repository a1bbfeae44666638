#pragma once

// On-disk formats.
//
//   segment CSV       header "t_s,value", t_s = i / rate_hz
//   segment sidecar   <id>.json: segment_id, mode, sensor, rate_hz, n
//   manifest.json     {"segments": [sidecar objects + "csv" file name]}
//   compressed JSONL  one CompressedSegment per line, values_scaled as
//                     exact two-decimal strings
//   provenance JSONL  one ReconstructionResult (without values) per line
//   LLM config        flat "key = value" text, '#' comments

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skipzip/codec.hpp"
#include "skipzip/format.hpp"
#include "skipzip/llm.hpp"

namespace skipzip::storage {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::IoError, "write to " + p.string() + " failed");
}

inline double number_from(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw Error(Errc::BadFormat, std::string(key) + " must be a number");
  return v.get<double>();
}

// Segments -------------------------------------------------------------------

inline json segment_meta(const SensorSegment& seg) {
  return {{"segment_id", seg.segment_id},
          {"mode", to_string(seg.mode)},
          {"sensor", to_string(seg.sensor)},
          {"rate_hz", seg.sample_rate_hz},
          {"n", seg.values.size()}};
}

inline std::string segment_csv(std::span<const double> values, double rate_hz) {
  std::string out = "t_s,value\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    out += shortest(static_cast<double>(i) / rate_hz) + "," + shortest(values[i]) + "\n";
  return out;
}

inline std::vector<double> parse_segment_csv(std::string_view text) {
  std::vector<double> values;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::BadFormat, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_s,value") throw Error(Errc::BadFormat, "CSV header must be 't_s,value'");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(Errc::BadFormat, "CSV row without comma: " + line);
    auto v = parse_double(std::string_view(line).substr(comma + 1));
    if (!v) throw Error(Errc::BadFormat, "bad CSV value: " + line);
    values.push_back(*v);
  }
  return values;
}

/// Writes <id>.csv and <id>.json into dir.
inline void write_segment(const SensorSegment& seg, const fs::path& dir) {
  write_file(dir / (seg.segment_id + ".csv"), segment_csv(seg.values, seg.sample_rate_hz));
  write_file(dir / (seg.segment_id + ".json"), segment_meta(seg).dump(2) + "\n");
}

inline SensorSegment segment_from_meta(const nlohmann::json& meta, const fs::path& csv) {
  SensorSegment seg;
  seg.segment_id = meta.at("segment_id").get<std::string>();
  seg.mode = parse_mode(meta.at("mode").get<std::string>());
  seg.sensor = parse_sensor(meta.at("sensor").get<std::string>());
  seg.sample_rate_hz = meta.contains("rate_hz") ? number_from(meta, "rate_hz") : 1.0;
  seg.values = parse_segment_csv(read_file(csv));
  return seg;
}

inline void write_dataset(const std::vector<SensorSegment>& segments, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  json manifest = {{"segments", json::array()}};
  for (const auto& seg : segments) {
    write_segment(seg, dir);
    auto meta = segment_meta(seg);
    meta["csv"] = seg.segment_id + ".csv";
    manifest["segments"].push_back(std::move(meta));
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

/// Reads a dataset directory through manifest.json, or failing that every
/// *.csv with a matching *.json sidecar, in file name order.
inline std::vector<SensorSegment> read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::IoError, dir.string() + " is not a directory");
  std::vector<SensorSegment> out;
  const auto manifest_path = dir / "manifest.json";
  try {
    if (fs::exists(manifest_path)) {
      const auto manifest = nlohmann::json::parse(read_file(manifest_path));
      for (const auto& meta : manifest.at("segments"))
        out.push_back(segment_from_meta(meta, dir / meta.at("csv").get<std::string>()));
      return out;
    }
    std::vector<fs::path> csvs;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
    std::sort(csvs.begin(), csvs.end());
    for (const auto& csv : csvs) {
      auto sidecar = csv;
      sidecar.replace_extension(".json");
      if (!fs::exists(sidecar)) throw Error(Errc::BadFormat, "missing sidecar for " + csv.string());
      out.push_back(segment_from_meta(nlohmann::json::parse(read_file(sidecar)), csv));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, e.what());
  }
  return out;
}

// Compressed segments -------------------------------------------------------

inline json to_json(const CompressedSegment& cs) {
  json values = json::array();
  for (double v : cs.values_scaled) values.push_back(fixed2(v));
  return {{"segment_id", cs.segment_id}, {"mode", to_string(cs.mode)}, {"sensor", to_string(cs.sensor)},
          {"alpha", cs.alpha},           {"n_total", cs.n_total},       {"x_min", cs.x_min},
          {"x_max", cs.x_max},           {"values_scaled", std::move(values)}};
}

inline CompressedSegment compressed_from_json(const nlohmann::json& j) {
  try {
    CompressedSegment cs;
    cs.segment_id = j.at("segment_id").get<std::string>();
    cs.mode = parse_mode(j.at("mode").get<std::string>());
    cs.sensor = parse_sensor(j.at("sensor").get<std::string>());
    cs.alpha = number_from(j, "alpha");
    cs.n_total = j.at("n_total").get<std::size_t>();
    cs.x_min = number_from(j, "x_min");
    cs.x_max = number_from(j, "x_max");
    for (const auto& v : j.at("values_scaled")) {
      if (!v.is_string()) throw Error(Errc::BadFormat, "values_scaled entries must be strings");
      const auto& s = v.get_ref<const std::string&>();
      const auto dot = s.find('.');
      if (dot == std::string::npos || s.size() - dot - 1 != 2)
        throw Error(Errc::BadFormat, "values_scaled entry '" + s + "' needs exactly two decimals");
      auto d = parse_double(s);
      if (!d) throw Error(Errc::BadFormat, "bad values_scaled entry '" + s + "'");
      cs.values_scaled.push_back(*d);
    }
    validate_compressed(cs);
    return cs;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, e.what());
  }
}

inline std::string to_jsonl_line(const CompressedSegment& cs) { return to_json(cs).dump(); }

inline CompressedSegment parse_jsonl_line(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::BadFormat, "line is not JSON");
  return compressed_from_json(j);
}

inline void write_compressed(const std::vector<CompressedSegment>& items, const fs::path& path) {
  std::string out;
  for (const auto& cs : items) out += to_jsonl_line(cs) + "\n";
  write_file(path, out);
}

inline std::vector<CompressedSegment> read_compressed(const fs::path& path) {
  std::vector<CompressedSegment> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_jsonl_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Reconstructions -----------------------------------------------------------

inline json provenance_json(const ReconstructionResult& r) {
  json j = {{"segment_id", r.segment_id},
            {"backend", r.backend},
            {"retries_used", r.retries_used},
            {"fell_back", r.fell_back}};
  j["raw_reply"] = r.raw_reply ? json(*r.raw_reply) : json(nullptr);
  return j;
}

inline json to_json(const ReconstructionResult& r) {
  auto j = provenance_json(r);
  j["values"] = r.values;
  return j;
}

inline ReconstructionResult reconstruction_from_json(const nlohmann::json& j) {
  ReconstructionResult r;
  r.segment_id = j.at("segment_id").get<std::string>();
  r.backend = j.at("backend").get<std::string>();
  r.retries_used = j.at("retries_used").get<int>();
  r.fell_back = j.at("fell_back").get<bool>();
  if (j.contains("raw_reply") && !j.at("raw_reply").is_null()) r.raw_reply = j.at("raw_reply").get<std::string>();
  if (j.contains("values")) r.values = j.at("values").get<std::vector<double>>();
  return r;
}

inline json to_json(const SensorSegment& seg) {
  auto j = segment_meta(seg);
  j["values"] = seg.values;
  return j;
}

inline SensorSegment segment_from_json(const nlohmann::json& j) {
  SensorSegment seg;
  seg.segment_id = j.at("segment_id").get<std::string>();
  seg.mode = parse_mode(j.at("mode").get<std::string>());
  seg.sensor = parse_sensor(j.at("sensor").get<std::string>());
  seg.sample_rate_hz = number_from(j, "rate_hz");
  seg.values = j.at("values").get<std::vector<double>>();
  return seg;
}

// LLM configuration ---------------------------------------------------------

struct LlmSettings {
  BackendKind kind = BackendKind::Remote;
  LlmConfig config;
  BackendOptions options;
};

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(Errc::BadConfig, key + ": expected a boolean, got '" + v + "'");
}

/// Applies one key to the settings. Shared by the config file and CLI flags.
inline void apply_setting(LlmSettings& s, const std::string& key, const std::string& value,
                          const fs::path& base_dir = {}) {
  auto number = [&]() {
    auto d = parse_double(value);
    if (!d) throw Error(Errc::BadConfig, key + ": expected a number, got '" + value + "'");
    return *d;
  };
  if (key == "backend") s.kind = parse_backend_kind(value);
  else if (key == "endpoint_url") s.config.endpoint_url = value;
  else if (key == "model_name" || key == "model") s.config.model_name = value;
  else if (key == "temperature") s.config.temperature = number();
  else if (key == "max_retries") {
    const double d = number();
    if (d != static_cast<int>(d)) throw Error(Errc::BadConfig, "max_retries must be an integer");
    s.config.max_retries = static_cast<int>(d);
  } else if (key == "timeout_s") s.config.timeout_s = number();
  else if (key == "api_key_env") s.config.api_key_env = value;
  else if (key == "script") {
    fs::path p(value);
    s.options.script_path = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  } else if (key == "decorate") s.options.decorate = parse_bool(key, value);
  else if (key == "api_key") throw Error(Errc::BadConfig, "API keys are read from the environment only; set api_key_env");
  else throw Error(Errc::BadConfig, "unknown key '" + key + "'");
}

inline LlmSettings parse_llm_settings(std::string_view text, const fs::path& base_dir = {}) {
  LlmSettings s;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string x) {
    const auto b = x.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = x.find_last_not_of(" \t\r");
    return x.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::BadConfig, "line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
  }
  s.config.validate();
  return s;
}

inline LlmSettings load_llm_settings(const fs::path& path) {
  return parse_llm_settings(read_file(path), path.parent_path());
}

}  // namespace skipzip::storage
