#pragma once

// Experiment grid: every (segment, alpha, backend) is compressed,
// reconstructed and scored against the original segment in physical units.
// Scores are averaged per (mode, sensor, alpha, backend).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "skipzip/codec.hpp"
#include "skipzip/format.hpp"
#include "skipzip/reconstruct.hpp"

namespace skipzip {

inline double mse(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) throw Error::length_mismatch(pred.size(), truth.size());
  if (truth.empty()) throw Error(Errc::EmptyInput, "mse of empty sequences");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    sum += d * d;
  }
  return sum / static_cast<double>(truth.size());
}

/// 100 * max(0, 1 - rmse / range). For a flat truth (range 0) the answer is
/// 100 on an exact reconstruction and 0 otherwise.
inline double accuracy_pct(double mse_value, double x_min, double x_max) {
  const double range = x_max - x_min;
  if (range <= 0.0) return mse_value == 0.0 ? 100.0 : 0.0;
  return 100.0 * std::max(0.0, 1.0 - std::sqrt(mse_value) / range);
}

inline const std::vector<std::string>& known_backends() {
  static const std::vector<std::string> tags = {"llm", "linear", "zoh", "spline"};
  return tags;
}

struct GridOptions {
  std::vector<double> alphas = {0.5, 0.7, 0.9};
  std::vector<std::string> backends = {"linear"};
  std::size_t parallelism = 4;

  // Only used by the "llm" backend.
  BackendPtr llm;
  std::optional<PromptTemplate> prompt_template;
  LlmConfig llm_config;
  Sleeper sleep = real_sleep;
};

struct GridStats {
  std::size_t tasks = 0;
  std::size_t fallbacks = 0;        // unparseable replies
  std::size_t transport_failures = 0;  // retries exhausted, scored with the linear baseline
};

inline ReconstructionResult reconstruct_with(const std::string& backend, const CompressedSegment& cs,
                                             const GridOptions& opts) {
  if (backend == "linear") return reconstruct_linear(cs);
  if (backend == "zoh") return reconstruct_zoh(cs);
  if (backend == "spline") return reconstruct_spline(cs);
  if (backend == "llm") {
    if (!opts.llm) throw Error(Errc::BadConfig, "llm backend requested without an LLM client");
    const PromptTemplate tpl = opts.prompt_template ? *opts.prompt_template : default_template();
    return reconstruct_llm(cs, *opts.llm, tpl, opts.llm_config, opts.sleep);
  }
  throw Error(Errc::UnknownBackend, backend);
}

namespace detail {

struct TaskOutcome {
  double mse = 0.0;
  double accuracy = 0.0;
  bool fell_back = false;
  bool transport_failure = false;
};

inline bool record_order(const EvaluationRecord& a, const EvaluationRecord& b) {
  return std::tie(a.mode, a.sensor, a.alpha, a.backend) < std::tie(b.mode, b.sensor, b.alpha, b.backend);
}

}  // namespace detail

inline std::vector<EvaluationRecord> run_grid(std::span<const SensorSegment> segments, const GridOptions& opts,
                                              GridStats* stats = nullptr) {
  if (segments.empty()) throw Error(Errc::EmptyInput, "no segments to evaluate");
  if (opts.alphas.empty()) throw Error(Errc::EmptyInput, "no alphas");
  if (opts.backends.empty()) throw Error(Errc::EmptyInput, "no backends");
  if (opts.parallelism == 0) throw Error(Errc::BadConfig, "parallelism must be positive");
  for (double a : opts.alphas) CompressionParams::checked(a);
  for (const auto& b : opts.backends)
    if (std::find(known_backends().begin(), known_backends().end(), b) == known_backends().end())
      throw Error(Errc::UnknownBackend, b);
  for (const auto& s : segments) validate_segment(s);

  const std::size_t n_alpha = opts.alphas.size();
  const std::size_t n_backend = opts.backends.size();
  const std::size_t n_tasks = segments.size() * n_alpha * n_backend;
  std::vector<detail::TaskOutcome> outcomes(n_tasks);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= n_tasks || abort.load()) return;
      const std::size_t b = t % n_backend;
      const std::size_t a = (t / n_backend) % n_alpha;
      const std::size_t s = t / (n_backend * n_alpha);
      const auto& seg = segments[s];
      try {
        const auto cs = compress(seg, {opts.alphas[a]});
        detail::TaskOutcome out;
        ReconstructionResult r;
        try {
          r = reconstruct_with(opts.backends[b], cs, opts);
        } catch (const Error& e) {
          if (e.code() != Errc::RetriesExhausted) throw;
          r = reconstruct_linear(cs);
          r.fell_back = true;
          out.transport_failure = true;
        }
        out.fell_back = r.fell_back;
        out.mse = mse(seg.values, r.values);
        const auto [lo, hi] = std::minmax_element(seg.values.begin(), seg.values.end());
        out.accuracy = accuracy_pct(out.mse, *lo, *hi);
        outcomes[t] = out;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  {
    const std::size_t n_threads = std::min(opts.parallelism, n_tasks);
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  // Aggregate in task order, which is independent of completion order.
  struct Acc {
    double mse = 0.0, accuracy = 0.0;
    std::size_t n = 0;
  };
  std::map<std::tuple<TransportMode, SensorKind, double, std::string>, Acc> acc;
  GridStats st;
  st.tasks = n_tasks;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const std::size_t b = t % n_backend;
    const std::size_t a = (t / n_backend) % n_alpha;
    const std::size_t s = t / (n_backend * n_alpha);
    auto& cell = acc[{segments[s].mode, segments[s].sensor, opts.alphas[a], opts.backends[b]}];
    cell.mse += outcomes[t].mse;
    cell.accuracy += outcomes[t].accuracy;
    ++cell.n;
    st.fallbacks += outcomes[t].fell_back && !outcomes[t].transport_failure;
    st.transport_failures += outcomes[t].transport_failure;
  }
  if (stats) *stats = st;

  std::vector<EvaluationRecord> records;
  records.reserve(acc.size());
  for (const auto& [key, cell] : acc) {
    EvaluationRecord r;
    std::tie(r.mode, r.sensor, r.alpha, r.backend) = key;
    const double n = static_cast<double>(cell.n);
    r.mse = cell.mse / n;
    r.rmse = std::sqrt(r.mse);
    r.accuracy_pct = cell.accuracy / n;
    r.n_segments = cell.n;
    records.push_back(std::move(r));
  }
  std::sort(records.begin(), records.end(), detail::record_order);
  return records;
}

enum class ReportFormat { Csv, Json };

inline constexpr std::string_view kReportHeader = "mode,sensor,alpha,backend,mse,rmse,accuracy_pct,n_segments";

inline nlohmann::ordered_json record_to_json(const EvaluationRecord& r) {
  return {{"mode", to_string(r.mode)},     {"sensor", to_string(r.sensor)}, {"alpha", r.alpha},
          {"backend", r.backend},          {"mse", r.mse},                  {"rmse", r.rmse},
          {"accuracy_pct", r.accuracy_pct}, {"n_segments", r.n_segments}};
}

inline EvaluationRecord record_from_json(const nlohmann::json& j) {
  EvaluationRecord r;
  r.mode = parse_mode(j.at("mode").get<std::string>());
  r.sensor = parse_sensor(j.at("sensor").get<std::string>());
  r.alpha = j.at("alpha").get<double>();
  r.backend = j.at("backend").get<std::string>();
  r.mse = j.at("mse").get<double>();
  r.rmse = j.at("rmse").get<double>();
  r.accuracy_pct = j.at("accuracy_pct").get<double>();
  r.n_segments = j.at("n_segments").get<std::size_t>();
  return r;
}

inline std::string format_report(std::vector<EvaluationRecord> records, ReportFormat format) {
  std::stable_sort(records.begin(), records.end(), detail::record_order);
  if (format == ReportFormat::Json) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : records) arr.push_back(record_to_json(r));
    return arr.dump(2) + "\n";
  }
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::string(to_string(r.mode)) + ',' + std::string(to_string(r.sensor)) + ',' + shortest(r.alpha) + ',' +
           r.backend + ',' + shortest(r.mse) + ',' + shortest(r.rmse) + ',' + shortest(r.accuracy_pct) + ',' +
           std::to_string(r.n_segments) + '\n';
  }
  return out;
}

inline void write_report(const std::vector<EvaluationRecord>& records, const std::string& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  out << format_report(records, format);
  if (!out) throw Error(Errc::IoError, "write to " + path + " failed");
}

/// Parses a CSV report written by write_report.
inline std::vector<EvaluationRecord> parse_csv_report(std::string_view text) {
  std::vector<EvaluationRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw Error(Errc::BadFormat, "report header mismatch");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw Error(Errc::BadFormat, "report row needs 8 fields: " + line);
    EvaluationRecord r;
    r.mode = parse_mode(f[0]);
    r.sensor = parse_sensor(f[1]);
    auto num = [&](const std::string& cell) {
      auto v = parse_double(cell);
      if (!v) throw Error(Errc::BadFormat, "bad number '" + cell + "'");
      return *v;
    };
    r.alpha = num(f[2]);
    r.backend = f[3];
    r.mse = num(f[4]);
    r.rmse = num(f[5]);
    r.accuracy_pct = num(f[6]);
    r.n_segments = std::stoul(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace skipzip
