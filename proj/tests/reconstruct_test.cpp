#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "skipzip/reconstruct.hpp"

namespace skipzip {
namespace {

void no_sleep(std::chrono::milliseconds) {}

SensorSegment ramp(std::size_t n) {
  SensorSegment s;
  s.segment_id = "ramp";
  s.values.resize(n);
  std::iota(s.values.begin(), s.values.end(), 0.0);
  return s;
}

SensorSegment random_segment(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(2, 60);
  std::uniform_real_distribution<double> v(-50.0, 50.0);
  SensorSegment s;
  s.segment_id = "r";
  s.values.resize(static_cast<std::size_t>(len(rng)));
  for (auto& x : s.values) x = v(rng);
  return s;
}

// Linear interpolation between known anchors written out from the formula
// rather than through the library.
std::vector<double> lerp_oracle(const std::vector<std::size_t>& pos, const std::vector<double>& y, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = 0;
    while (k + 2 < pos.size() && pos[k + 1] <= i) ++k;
    const double t = static_cast<double>(i - pos[k]) / static_cast<double>(pos[k + 1] - pos[k]);
    out[i] = y[k] + t * (y[k + 1] - y[k]);
  }
  return out;
}

double max_abs_err(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(Linear, RampAtHalfWithinTruncationBound) {
  const auto seg = ramp(30);
  const auto r = reconstruct_linear(compress(seg, {0.5}));
  ASSERT_EQ(r.values.size(), 30u);
  EXPECT_LT(max_abs_err(r.values, seg.values), 0.01 * 29);
  EXPECT_EQ(r.backend, "linear");
  EXPECT_FALSE(r.fell_back);
}

TEST(Linear, TwoAnchorMidpoint) {
  CompressedSegment cs;
  cs.n_total = 3;
  cs.alpha = 0.5;
  cs.x_min = 0.0;
  cs.x_max = 1.0;
  cs.values_scaled = {0.0, 1.0};
  EXPECT_EQ(reconstruct_linear(cs).values, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Linear, MatchesOracle) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 300; ++t) {
    const auto seg = random_segment(rng);
    const auto cs = compress(seg, {0.1 + 0.1 * (t % 10)});
    const auto plan = plan_for(cs);
    auto want = lerp_oracle(plan.kept_indices, cs.values_scaled, cs.n_total);
    for (auto& v : want) v = cs.x_min + v * (cs.x_max - cs.x_min);
    const auto got = reconstruct_linear(cs).values;
    ASSERT_LT(max_abs_err(got, want), 1e-9);
  }
}

TEST(Baselines, ConstantSegmentIsExact) {
  SensorSegment s;
  s.values.assign(30, 4.25);
  for (double a : {0.2, 0.5, 1.0}) {
    const auto cs = compress(s, {a});
    EXPECT_EQ(reconstruct_linear(cs).values, s.values);
    EXPECT_EQ(reconstruct_zoh(cs).values, s.values);
    EXPECT_EQ(reconstruct_spline(cs).values, s.values);
  }
}

TEST(Zoh, HoldSemantics) {
  CompressedSegment cs;
  cs.n_total = 4;
  cs.alpha = 0.5;
  cs.x_min = 0.0;
  cs.x_max = 1.0;
  cs.values_scaled = {0.0, 1.0};
  EXPECT_EQ(reconstruct_zoh(cs).values, (std::vector<double>{0.0, 0.0, 0.0, 1.0}));
}

TEST(Baselines, FullAlphaIsIdentityOnAnchors) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto cs = compress(random_segment(rng), {1.0});
    const auto want = inverse_rescale<double>(cs.values_scaled, cs.x_min, cs.x_max);
    EXPECT_EQ(reconstruct_zoh(cs).values, want);
    EXPECT_LT(max_abs_err(reconstruct_linear(cs).values, want), 1e-9);
    EXPECT_LT(max_abs_err(reconstruct_spline(cs).values, want), 1e-9);
  }
}

TEST(Spline, TwoAnchorsEqualsLinear) {
  const auto cs = compress(ramp(30), {0.05});
  ASSERT_EQ(cs.values_scaled.size(), 2u);
  EXPECT_EQ(reconstruct_spline(cs).values, reconstruct_linear(cs).values);
  EXPECT_EQ(reconstruct_spline(cs).backend, "spline");
}

TEST(Spline, ParabolaBeatsLinear) {
  // Five anchors of 1 - ((i - 14.5) / 14.5)^2 over 30 samples.
  SensorSegment s;
  for (int i = 0; i < 30; ++i) {
    const double u = (i - 14.5) / 14.5;
    s.values.push_back(1.0 - u * u);
  }
  const auto cs = compress(s, {5.0 / 30.0});
  ASSERT_EQ(cs.values_scaled.size(), 5u);
  const double spline_err = max_abs_err(reconstruct_spline(cs).values, s.values);
  const double linear_err = max_abs_err(reconstruct_linear(cs).values, s.values);
  EXPECT_LE(spline_err, linear_err);
}

TEST(Baselines, LengthAndAnchorFidelity) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const auto seg = random_segment(rng);
    const auto cs = compress(seg, {0.1 + 0.1 * (t % 10)});
    const auto plan = plan_for(cs);
    const auto anchors = inverse_rescale<double>(cs.values_scaled, cs.x_min, cs.x_max);
    for (const auto& r : {reconstruct_linear(cs), reconstruct_zoh(cs), reconstruct_spline(cs)}) {
      ASSERT_EQ(r.values.size(), seg.values.size());
      for (std::size_t j = 0; j < plan.kept_indices.size(); ++j)
        ASSERT_NEAR(r.values[plan.kept_indices[j]], anchors[j], 1e-9 * (1 + std::abs(anchors[j]))) << r.backend;
    }
  }
}

TEST(Llm, MockInterpolatingMatchesLinearBaseline) {
  MockInterpolatingBackend mock(true);
  std::mt19937_64 rng(31);
  for (int t = 0; t < 200; ++t) {
    const auto cs = compress(random_segment(rng), {0.1 + 0.1 * (t % 10)});
    const auto r = reconstruct_llm(cs, mock, default_template(), LlmConfig{}, no_sleep);
    EXPECT_FALSE(r.fell_back);
    EXPECT_EQ(r.backend, "llm");
    EXPECT_EQ(r.retries_used, 0);
    ASSERT_TRUE(r.raw_reply.has_value());
    ASSERT_LT(max_abs_err(r.values, reconstruct_linear(cs).values), 1e-9);
  }
}

TEST(Llm, GarbageTwiceFallsBackToLinear) {
  const auto cs = compress(ramp(30), {0.5});
  MockScriptedBackend mock({{ScriptStep::Kind::Reply, "I cannot help with that.", 0},
                            {ScriptStep::Kind::Reply, "[0.1, 0.2]", 0}});
  const auto r = reconstruct_llm(cs, mock, default_template(), LlmConfig{}, no_sleep);
  EXPECT_TRUE(r.fell_back);
  EXPECT_EQ(r.values, reconstruct_linear(cs).values);
  EXPECT_EQ(r.raw_reply, "[0.1, 0.2]");
  EXPECT_EQ(mock.calls(), 2u);
}

TEST(Llm, CorrectiveRepromptRecovers) {
  SensorSegment s;
  s.values = {0, 1, 2};
  const auto cs = compress(s, {1.0});
  MockScriptedBackend mock({{ScriptStep::Kind::Reply, "two numbers: 0.1 0.2", 0},
                            {ScriptStep::Kind::Reply, "0.00, 0.50, 1.00", 0}});
  const auto r = reconstruct_llm(cs, mock, default_template(), LlmConfig{}, no_sleep);
  EXPECT_FALSE(r.fell_back);
  EXPECT_EQ(r.values, (std::vector<double>{0.0, 1.0, 2.0}));
}

TEST(Llm, EchoAtFullAlphaIsInverseRescale) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto cs = compress(random_segment(rng), {1.0});
    MockScriptedBackend echo({{ScriptStep::Kind::Reply, render_sequence(cs.values_scaled), 0}});
    const auto r = reconstruct_llm(cs, echo, default_template(), LlmConfig{}, no_sleep);
    EXPECT_EQ(r.values, inverse_rescale<double>(cs.values_scaled, cs.x_min, cs.x_max));
  }
}

TEST(Llm, OutOfRangeRepliesAreClamped) {
  SensorSegment s;
  s.values = {10, 20, 30};
  const auto cs = compress(s, {1.0});
  MockScriptedBackend mock({{ScriptStep::Kind::Reply, "[-0.2, 0.5, 1.3]", 0}});
  const auto r = reconstruct_llm(cs, mock, default_template(), LlmConfig{}, no_sleep);
  EXPECT_EQ(r.values, (std::vector<double>{10, 20, 30}));
}

TEST(Llm, RetriesAreCountedAndExhaustionPropagates) {
  const auto cs = compress(ramp(30), {1.0});
  MockScriptedBackend flaky({{ScriptStep::Kind::Timeout, "", 0}, {ScriptStep::Kind::Reply, render_sequence(cs.values_scaled), 0}});
  EXPECT_EQ(reconstruct_llm(cs, flaky, default_template(), LlmConfig{}, no_sleep).retries_used, 1);

  MockScriptedBackend dead(std::vector<ScriptStep>(4, {ScriptStep::Kind::Timeout, "", 0}));
  try {
    reconstruct_llm(cs, dead, default_template(), LlmConfig{}, no_sleep);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RetriesExhausted);
  }
}

}  // namespace
}  // namespace skipzip
