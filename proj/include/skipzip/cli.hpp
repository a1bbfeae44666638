#pragma once

// Command implementations behind the `skipzip` executable. Each command takes
// its arguments (without the command name) and returns a process exit code:
//
//   0  success
//   2  bad arguments or configuration
//   3  I/O failure
//   4  compress: some segments failed validation and were skipped
//   5  decompress: an LLM request exhausted its retries

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skipzip/codec.hpp"
#include "skipzip/datagen.hpp"
#include "skipzip/evaluate.hpp"
#include "skipzip/prompt.hpp"
#include "skipzip/reconstruct.hpp"
#include "skipzip/storage.hpp"

namespace skipzip::cli {

namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kBadArgs = 2, kIo = 3, kSkipped = 4, kLlmExhausted = 5 };

namespace detail {

inline int exit_for(const Error& e) {
  switch (e.code()) {
    case Errc::IoError: return kIo;
    default: return kBadArgs;
  }
}

/// Parses args with CLI11. Returns an exit code when the command should stop
/// (help requested or a parse error), nullopt to continue.
inline std::optional<int> parse(CLI::App& app, std::vector<std::string> args, std::ostream& out,
                                std::ostream& err) {
  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kBadArgs;
  }
  return std::nullopt;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
  return out;
}

inline std::vector<double> parse_alphas(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) {
    auto v = parse_double(tok);
    if (!v) throw Error(Errc::BadAlpha, "not a number: '" + tok + "'");
    out.push_back(CompressionParams::checked(*v).alpha);
  }
  if (out.empty()) throw Error(Errc::BadAlpha, "no alphas given");
  return out;
}

/// LLM flags shared by decompress and evaluate.
struct LlmFlags {
  std::string config_path;
  std::string template_path;
  std::optional<std::string> llm_backend;
  std::optional<std::string> model;
  std::optional<std::string> endpoint;
  std::optional<double> temperature;
  std::optional<int> max_retries;
  std::optional<double> timeout_s;

  void add_to(CLI::App& app) {
    app.add_option("--llm-config", config_path, "LLM settings file (key = value)");
    app.add_option("--template", template_path, "Prompt template file");
    app.add_option("--llm-backend", llm_backend, "remote | mock_interpolating | mock_scripted");
    app.add_option("--model", model, "Model name");
    app.add_option("--endpoint", endpoint, "Chat-completions endpoint URL");
    app.add_option("--temperature", temperature, "Sampling temperature");
    app.add_option("--max-retries", max_retries, "Retries per request (0-10)");
    app.add_option("--timeout", timeout_s, "Request timeout in seconds");
  }

  storage::LlmSettings settings() const {
    storage::LlmSettings s;
    if (!config_path.empty()) s = storage::load_llm_settings(config_path);
    if (llm_backend) s.kind = parse_backend_kind(*llm_backend);
    if (model) s.config.model_name = *model;
    if (endpoint) s.config.endpoint_url = *endpoint;
    if (temperature) s.config.temperature = *temperature;
    if (max_retries) s.config.max_retries = *max_retries;
    if (timeout_s) s.config.timeout_s = *timeout_s;
    s.config.validate();
    return s;
  }

  PromptTemplate prompt_template() const {
    return template_path.empty() ? default_template() : PromptTemplate::load(template_path);
  }
};

}  // namespace detail

inline int cmd_generate(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Write a synthetic bus/taxi/MTR dataset", "generate"};
  std::uint64_t seed = 0;
  std::string dir;
  std::size_t segments = 30;
  unsigned duration = 30;
  double rate = 1.0;
  app.add_option("--seed", seed, "Dataset seed")->capture_default_str();
  app.add_option("--out", dir, "Output directory")->required();
  app.add_option("--segments", segments, "Segments per (mode, sensor)")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--duration", duration, "Segment duration in seconds")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--rate", rate, "Sampling rate in Hz")->capture_default_str()->check(CLI::PositiveNumber);
  if (auto rc = detail::parse(app, args, out, err)) return *rc;

  try {
    const auto data = datagen::generate_dataset(seed, segments, duration, rate);
    storage::write_dataset(data, dir);
    out << "wrote " << data.size() << " segments to " << dir << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_for(e);
  }
}

inline int cmd_compress(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Skip-sample, rescale and truncate every segment of a dataset", "compress"};
  std::string in_dir, out_path;
  double alpha = 0.0;
  app.add_option("--in", in_dir, "Dataset directory")->required();
  app.add_option("--alpha", alpha, "Retained fraction in (0, 1]")->required();
  app.add_option("--out", out_path, "Output JSONL file")->required();
  if (auto rc = detail::parse(app, args, out, err)) return *rc;

  try {
    CompressionParams::checked(alpha);
    if (!fs::is_directory(in_dir)) {
      err << "error: input directory " << in_dir << " does not exist\n";
      return kBadArgs;
    }
    const auto segments = storage::read_dataset(in_dir);
    if (segments.empty()) {
      err << "error: no segments in " << in_dir << "\n";
      return kBadArgs;
    }
    std::vector<CompressedSegment> compressed;
    std::size_t skipped = 0;
    for (const auto& seg : segments) {
      try {
        compressed.push_back(compress(seg, {alpha}));
      } catch (const Error& e) {
        err << "skipping " << seg.segment_id << ": " << e.what() << "\n";
        ++skipped;
      }
    }
    storage::write_compressed(compressed, out_path);
    out << "compressed " << compressed.size() << " segments (alpha " << shortest(alpha) << ") to " << out_path
        << "\n";
    return skipped ? kSkipped : kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_for(e);
  }
}

inline int cmd_decompress(const std::vector<std::string>& args, std::ostream& out = std::cout,
                          std::ostream& err = std::cerr) {
  CLI::App app{"Reconstruct full-length segments from a compressed JSONL file", "decompress"};
  std::string in_path, backend, out_dir;
  detail::LlmFlags llm;
  app.add_option("--in", in_path, "Compressed JSONL file")->required();
  app.add_option("--backend", backend, "llm | linear | zoh | spline")->required();
  app.add_option("--out", out_dir, "Output directory")->required();
  llm.add_to(app);
  if (auto rc = detail::parse(app, args, out, err)) return *rc;

  try {
    const auto& tags = known_backends();
    if (std::find(tags.begin(), tags.end(), backend) == tags.end()) {
      err << "error: unknown backend '" << backend << "'\n";
      return kBadArgs;
    }
    GridOptions opts;
    if (backend == "llm") {
      const auto s = llm.settings();
      opts.llm = make_backend(s.kind, s.config, s.options);
      opts.llm_config = s.config;
      opts.prompt_template = llm.prompt_template();
    }
    const auto items = storage::read_compressed(in_path);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + out_dir);

    std::string provenance;
    std::size_t exhausted = 0;
    for (const auto& cs : items) {
      ReconstructionResult r;
      try {
        r = reconstruct_with(backend, cs, opts);
      } catch (const Error& e) {
        if (e.code() != Errc::RetriesExhausted) throw;
        err << cs.segment_id << ": " << e.what() << "\n";
        r = reconstruct_linear(cs);
        r.backend = backend;
        r.fell_back = true;
        r.retries_used = opts.llm_config.max_retries;
        ++exhausted;
      }
      storage::write_file(fs::path(out_dir) / (cs.segment_id + ".csv"), storage::segment_csv(r.values, 1.0));
      provenance += storage::provenance_json(r).dump() + "\n";
    }
    storage::write_file(fs::path(out_dir) / "provenance.jsonl", provenance);
    out << "reconstructed " << items.size() << " segments with " << backend << " into " << out_dir << "\n";
    return exhausted ? kLlmExhausted : kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_for(e);
  }
}

inline int cmd_evaluate(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Run the compression-ratio x backend grid and write an MSE report", "evaluate"};
  std::string data_dir, alphas = "0.5,0.7,0.9", backends = "linear", report, format = "csv";
  long long parallelism = 4;
  detail::LlmFlags llm;
  app.add_option("--data", data_dir, "Dataset directory")->required();
  app.add_option("--alphas", alphas, "Comma-separated retained fractions")->capture_default_str();
  app.add_option("--backends", backends, "Comma-separated backends: llm, linear, zoh, spline")->capture_default_str();
  app.add_option("--report", report, "Report output path")->required();
  app.add_option("--format", format, "csv | json")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--parallelism", parallelism, "Concurrent reconstruction tasks")->capture_default_str();
  llm.add_to(app);
  if (auto rc = detail::parse(app, args, out, err)) return *rc;

  try {
    if (parallelism <= 0) {
      err << "error: --parallelism must be positive\n";
      return kBadArgs;
    }
    GridOptions opts;
    opts.alphas = detail::parse_alphas(alphas);
    opts.backends = detail::split_list(backends);
    opts.parallelism = static_cast<std::size_t>(parallelism);
    for (const auto& b : opts.backends)
      if (std::find(known_backends().begin(), known_backends().end(), b) == known_backends().end()) {
        err << "error: unknown backend '" << b << "'\n";
        return kBadArgs;
      }
    if (std::find(opts.backends.begin(), opts.backends.end(), "llm") != opts.backends.end()) {
      const auto s = llm.settings();
      opts.llm = make_backend(s.kind, s.config, s.options);
      opts.llm_config = s.config;
      opts.prompt_template = llm.prompt_template();
    }
    if (!fs::is_directory(data_dir)) {
      err << "error: data directory " << data_dir << " does not exist\n";
      return kBadArgs;
    }
    const auto segments = storage::read_dataset(data_dir);
    GridStats stats;
    const auto records = run_grid(segments, opts, &stats);
    write_report(records, report, format == "json" ? ReportFormat::Json : ReportFormat::Csv);
    out << "evaluated " << stats.tasks << " reconstructions (" << stats.fallbacks << " parse fallbacks, "
        << stats.transport_failures << " transport failures); report written to " << report << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_for(e);
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const std::string usage =
      "usage: skipzip <command> [options]\n"
      "commands:\n"
      "  generate    write a synthetic dataset\n"
      "  compress    compress a dataset into JSONL\n"
      "  decompress  reconstruct segments from JSONL\n"
      "  evaluate    run the evaluation grid and write a report\n"
      "run 'skipzip <command> --help' for options\n";
  if (argc < 2) {
    err << usage;
    return kBadArgs;
  }
  const std::string cmd = argv[1];
  const std::vector<std::string> args(argv + 2, argv + argc);
  if (cmd == "generate") return cmd_generate(args, out, err);
  if (cmd == "compress") return cmd_compress(args, out, err);
  if (cmd == "decompress") return cmd_decompress(args, out, err);
  if (cmd == "evaluate") return cmd_evaluate(args, out, err);
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    out << usage;
    return kOk;
  }
  err << "unknown command '" << cmd << "'\n" << usage;
  return kBadArgs;
}

}  // namespace skipzip::cli
