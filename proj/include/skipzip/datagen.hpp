#pragma once

// Synthetic bus / taxi / MTR sensor traces.
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by the
// C++ standard, with uniform and normal variates derived here (53-bit uniform,
// Box-Muller) rather than through <random> distributions, whose algorithms
// differ between standard libraries. Per-stream seeds are derived with the
// SplitMix64 finaliser (constants 0x9e3779b97f4a7c15, 0xbf58476d1ce4e5b9,
// 0x94d049bb133111eb). Together this makes every trace bit-reproducible
// across platforms.
//
// Altitude and barometer traces generated with the same (mode, seed) describe
// the same trip: pressure is 1013.25 hPa minus altitude / 8.43 m/hPa plus
// AR(1) noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "skipzip/core.hpp"

namespace skipzip::datagen {

inline constexpr double kSeaLevelHpa = 1013.25;
inline constexpr double kMetresPerHpa = 8.43;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag + 0x5851f42d4c957f2dULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Normal truncated to +-3 standard deviations.
  double bounded_normal(double sd) { return sd * std::clamp(normal(), -3.0, 3.0); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SpeedProfile {
  double v_max;                 // m/s
  double accel_lo, accel_hi;    // m/s^2
  double brake_lo, brake_hi;    // m/s^2
  double phase_lo, phase_hi;    // s
  double noise_sd;              // m/s, truncated at 3 sd
};

/// MTR: long, gentle phases capped at 1.0 m/s^2. Taxi: short, hard phases.
inline SpeedProfile speed_profile(TransportMode m) {
  switch (m) {
    case TransportMode::Mtr: return {22.0, 0.6, 1.0, 0.6, 1.0, 8.0, 20.0, 0.03};
    case TransportMode::Bus: return {14.0, 0.6, 1.5, 0.8, 2.0, 3.0, 9.0, 0.25};
    case TransportMode::Taxi: return {18.0, 1.0, 2.8, 1.0, 3.5, 2.0, 6.0, 0.35};
  }
  return {};
}

namespace detail {

enum class Phase { Stop, Accel, Cruise, Brake };

inline std::vector<double> true_speed(TransportMode mode, Rng& rng, std::size_t n, double dt) {
  const auto p = speed_profile(mode);
  double v = rng.uniform(0.0, p.v_max);
  Phase phase = v < 1.0 ? Phase::Stop : (rng.uniform() < 0.5 ? Phase::Cruise : Phase::Accel);
  double accel = 0.0;
  double remaining = 0.0;

  auto enter = [&](Phase next) {
    phase = next;
    remaining = rng.uniform(p.phase_lo, p.phase_hi);
    switch (phase) {
      case Phase::Stop: accel = 0.0; break;
      case Phase::Accel: accel = rng.uniform(p.accel_lo, p.accel_hi); break;
      case Phase::Cruise: accel = 0.0; break;
      case Phase::Brake: accel = -rng.uniform(p.brake_lo, p.brake_hi); break;
    }
  };
  auto next_phase = [&]() {
    const double u = rng.uniform();
    switch (phase) {
      case Phase::Stop: return Phase::Accel;
      case Phase::Accel: return u < 0.6 ? Phase::Cruise : Phase::Brake;
      case Phase::Cruise: return u < 0.3 ? Phase::Accel : (u < 0.8 ? Phase::Brake : Phase::Cruise);
      case Phase::Brake: return u < 0.3 ? Phase::Stop : (u < 0.7 ? Phase::Accel : Phase::Cruise);
    }
    return Phase::Cruise;
  };
  enter(phase);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = v;
    v = std::clamp(v + accel * dt, 0.0, p.v_max);
    remaining -= dt;
    if (phase == Phase::Brake && v == 0.0) enter(Phase::Stop);
    else if (phase == Phase::Accel && v == p.v_max) enter(Phase::Cruise);
    else if (remaining <= 0.0) enter(next_phase());
  }
  return out;
}

/// Altitude without sensor noise.
inline std::vector<double> true_altitude(TransportMode mode, Rng& rng, std::size_t n, double dt) {
  std::vector<double> out(n);
  if (mode == TransportMode::Mtr) {
    // Near-flat track with an occasional station gradient (smoothstep ramp).
    const double base = rng.uniform(-25.0, 5.0);
    const bool has_event = rng.uniform() < 0.6;
    const double rise = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(2.0, 8.0);
    const double length = rng.uniform(10.0, 20.0);
    const double duration = static_cast<double>(n) * dt;
    const double start = rng.uniform(0.0, std::max(0.0, duration - length));
    for (std::size_t i = 0; i < n; ++i) {
      double a = base;
      if (has_event) {
        const double s = std::clamp((static_cast<double>(i) * dt - start) / length, 0.0, 1.0);
        a += rise * s * s * (3.0 - 2.0 * s);
      }
      out[i] = a;
    }
    return out;
  }
  // Road: integrated AR(1) climb rate, excursion limited to +-10 m.
  const double base = rng.uniform(5.0, 60.0);
  const double sd = mode == TransportMode::Taxi ? 0.2 : 0.15;
  double grade = rng.normal() * sd;
  double e = 0.0;
  std::vector<double> excursion(n);
  for (std::size_t i = 0; i < n; ++i) {
    excursion[i] = e;
    grade = 0.9 * grade + rng.normal() * sd * std::sqrt(dt);
    e += grade * dt;
  }
  double peak = 0.0;
  for (double x : excursion) peak = std::max(peak, std::abs(x));
  const double scale = peak > 10.0 ? 10.0 / peak : 1.0;
  for (std::size_t i = 0; i < n; ++i) out[i] = base + scale * excursion[i];
  return out;
}

}  // namespace detail

inline std::string segment_id(TransportMode m, SensorKind s, std::size_t index) {
  return std::string(to_string(m)) + "-" + std::string(to_string(s)) + "-" + std::to_string(index);
}

inline SensorSegment generate_segment(TransportMode mode, SensorKind sensor, std::uint64_t seed,
                                      unsigned duration_s = 30, double rate_hz = 1.0) {
  if (!(rate_hz > 0.0)) throw Error(Errc::NonPositiveRate, "rate_hz must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
  const double dt = 1.0 / rate_hz;
  const std::uint64_t trip = derive_seed(seed, static_cast<std::uint64_t>(mode) + 1);

  SensorSegment seg;
  seg.mode = mode;
  seg.sensor = sensor;
  seg.sample_rate_hz = rate_hz;
  seg.segment_id = std::string(to_string(mode)) + "-" + std::string(to_string(sensor)) + "-s" + std::to_string(seed);

  switch (sensor) {
    case SensorKind::Speed: {
      Rng rng(derive_seed(trip, 1));
      Rng noise(derive_seed(trip, 2));
      const double sd = speed_profile(mode).noise_sd;
      seg.values = detail::true_speed(mode, rng, n, dt);
      for (auto& v : seg.values) v = std::max(0.0, v + noise.bounded_normal(sd));
      break;
    }
    case SensorKind::Altitude: {
      Rng rng(derive_seed(trip, 3));
      Rng noise(derive_seed(trip, 4));
      const double sd = mode == TransportMode::Mtr ? 0.08 : 0.15;
      seg.values = detail::true_altitude(mode, rng, n, dt);
      for (auto& v : seg.values) v += noise.bounded_normal(sd);
      break;
    }
    case SensorKind::Barometer: {
      Rng rng(derive_seed(trip, 3));
      Rng noise(derive_seed(trip, 5));
      const auto alt = detail::true_altitude(mode, rng, n, dt);
      seg.values.resize(n);
      double colored = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        colored = 0.7 * colored + noise.bounded_normal(0.02);
        seg.values[i] = kSeaLevelHpa - alt[i] / kMetresPerHpa + colored;
      }
      break;
    }
  }
  return seg;
}

/// modes x sensors x segments_per_mode segments with ids "{mode}-{sensor}-{index}".
/// Altitude and barometer segments with the same mode and index share a trip.
inline std::vector<SensorSegment> generate_dataset(std::uint64_t seed, std::size_t segments_per_mode = 30,
                                                   unsigned duration_s = 30, double rate_hz = 1.0) {
  std::vector<SensorSegment> out;
  out.reserve(9 * segments_per_mode);
  for (auto mode : kAllModes)
    for (auto sensor : kAllSensors)
      for (std::size_t i = 0; i < segments_per_mode; ++i) {
        auto seg = generate_segment(mode, sensor, derive_seed(seed, 1000 + i), duration_s, rate_hz);
        seg.segment_id = segment_id(mode, sensor, i);
        out.push_back(std::move(seg));
      }
  return out;
}

}  // namespace skipzip::datagen
