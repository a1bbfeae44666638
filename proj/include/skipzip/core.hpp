#pragma once

// Domain types shared by every stage of the pipeline: segments as recorded on
// the vehicle, their compressed form, reconstructions and evaluation records.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace skipzip {

enum class Errc {
  EmptySegment,
  NonFiniteValue,
  NonPositiveRate,
  SegmentTooShort,
  BadAlpha,
  LengthMismatch,
  TemplateSlotMissing,
  TemplateSlotUnknown,
  Timeout,
  Transport,
  HttpStatus,
  RetriesExhausted,
  MissingApiKey,
  UnknownBackend,
  BadMockScript,
  NoNumbersFound,
  OutOfBand,
  EmptyInput,
  IoError,
  BadFormat,
  BadConfig,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::EmptySegment: return "EmptySegment";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::NonPositiveRate: return "NonPositiveRate";
    case Errc::SegmentTooShort: return "SegmentTooShort";
    case Errc::BadAlpha: return "BadAlpha";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TemplateSlotMissing: return "TemplateSlotMissing";
    case Errc::TemplateSlotUnknown: return "TemplateSlotUnknown";
    case Errc::Timeout: return "Timeout";
    case Errc::Transport: return "Transport";
    case Errc::HttpStatus: return "HttpStatus";
    case Errc::RetriesExhausted: return "RetriesExhausted";
    case Errc::MissingApiKey: return "MissingApiKey";
    case Errc::UnknownBackend: return "UnknownBackend";
    case Errc::BadMockScript: return "BadMockScript";
    case Errc::NoNumbersFound: return "NoNumbersFound";
    case Errc::OutOfBand: return "OutOfBand";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::IoError: return "IoError";
    case Errc::BadFormat: return "BadFormat";
    case Errc::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

/// Single exception type for the library. The optional fields carry the
/// payload of the error kinds that have one (index for NonFiniteValue and
/// OutOfBand, found/expected for LengthMismatch, status for HttpStatus).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  std::optional<std::size_t> index;
  std::optional<std::size_t> found;
  std::optional<std::size_t> expected;
  std::optional<int> status;
  std::optional<double> value;

  static Error length_mismatch(std::size_t found, std::size_t expected) {
    Error e(Errc::LengthMismatch, "found " + std::to_string(found) + ", expected " +
                                      std::to_string(expected));
    e.found = found;
    e.expected = expected;
    return e;
  }
  static Error non_finite(std::size_t i) {
    Error e(Errc::NonFiniteValue, "value at index " + std::to_string(i) + " is not finite");
    e.index = i;
    return e;
  }
  static Error out_of_band(std::size_t i, double v) {
    Error e(Errc::OutOfBand, "value " + std::to_string(v) + " at index " + std::to_string(i));
    e.index = i;
    e.value = v;
    return e;
  }
  static Error http_status(int code, const std::string& body) {
    Error e(Errc::HttpStatus, std::to_string(code) + " " + body);
    e.status = code;
    return e;
  }

 private:
  Errc code_;
};

enum class TransportMode { Bus, Taxi, Mtr };
enum class SensorKind { Barometer, Speed, Altitude };

inline constexpr TransportMode kAllModes[] = {TransportMode::Bus, TransportMode::Taxi,
                                              TransportMode::Mtr};
inline constexpr SensorKind kAllSensors[] = {SensorKind::Barometer, SensorKind::Speed,
                                             SensorKind::Altitude};

constexpr std::string_view to_string(TransportMode m) {
  switch (m) {
    case TransportMode::Bus: return "bus";
    case TransportMode::Taxi: return "taxi";
    case TransportMode::Mtr: return "mtr";
  }
  return "";
}

constexpr std::string_view to_string(SensorKind s) {
  switch (s) {
    case SensorKind::Barometer: return "barometer";
    case SensorKind::Speed: return "speed";
    case SensorKind::Altitude: return "altitude";
  }
  return "";
}

constexpr std::string_view unit_of(SensorKind s) {
  switch (s) {
    case SensorKind::Barometer: return "hPa";
    case SensorKind::Speed: return "m/s";
    case SensorKind::Altitude: return "m";
  }
  return "";
}

inline TransportMode parse_mode(std::string_view s) {
  for (auto m : kAllModes)
    if (to_string(m) == s) return m;
  throw Error(Errc::BadFormat, "unknown transport mode '" + std::string(s) + "'");
}

inline SensorKind parse_sensor(std::string_view s) {
  for (auto k : kAllSensors)
    if (to_string(k) == s) return k;
  throw Error(Errc::BadFormat, "unknown sensor kind '" + std::string(s) + "'");
}

/// One contiguous recording in physical units.
struct SensorSegment {
  TransportMode mode = TransportMode::Bus;
  SensorKind sensor = SensorKind::Barometer;
  double sample_rate_hz = 1.0;
  std::vector<double> values;
  std::string segment_id;

  friend bool operator==(const SensorSegment&, const SensorSegment&) = default;
};

/// Retained fraction of samples, 0 < alpha <= 1.
struct CompressionParams {
  double alpha = 1.0;

  static CompressionParams checked(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw Error(Errc::BadAlpha, "alpha must lie in (0, 1], got " + std::to_string(alpha));
    return {alpha};
  }
};

/// What travels from the vehicle to the cloud. Kept indices are not stored;
/// they follow from (alpha, n_total).
struct CompressedSegment {
  std::string segment_id;
  TransportMode mode = TransportMode::Bus;
  SensorKind sensor = SensorKind::Barometer;
  double alpha = 1.0;
  std::size_t n_total = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  std::vector<double> values_scaled;

  friend bool operator==(const CompressedSegment&, const CompressedSegment&) = default;
};

struct ReconstructionResult {
  std::string segment_id;
  std::string backend;
  std::vector<double> values;
  int retries_used = 0;
  bool fell_back = false;
  std::optional<std::string> raw_reply;

  friend bool operator==(const ReconstructionResult&, const ReconstructionResult&) = default;
};

struct EvaluationRecord {
  TransportMode mode = TransportMode::Bus;
  SensorKind sensor = SensorKind::Barometer;
  double alpha = 1.0;
  std::string backend;
  double mse = 0.0;
  double rmse = 0.0;
  double accuracy_pct = 0.0;
  std::size_t n_segments = 0;

  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

inline const SensorSegment& validate_segment(const SensorSegment& seg) {
  if (seg.values.empty()) throw Error(Errc::EmptySegment, "segment '" + seg.segment_id + "' has no values");
  if (!(seg.sample_rate_hz > 0.0) || !std::isfinite(seg.sample_rate_hz))
    throw Error(Errc::NonPositiveRate, "segment '" + seg.segment_id + "' sample rate must be positive");
  for (std::size_t i = 0; i < seg.values.size(); ++i)
    if (!std::isfinite(seg.values[i])) throw Error::non_finite(i);
  return seg;
}

}  // namespace skipzip
