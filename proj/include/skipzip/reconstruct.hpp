#pragma once

// Cloud-side reconstruction: the LLM path and three deterministic baselines.
// All of them produce n_total values in physical units.

#include <string>
#include <vector>

#include "skipzip/codec.hpp"
#include "skipzip/interp.hpp"
#include "skipzip/llm.hpp"
#include "skipzip/parse.hpp"
#include "skipzip/prompt.hpp"

namespace skipzip {

namespace detail {

inline ReconstructionResult finish(const CompressedSegment& cs, std::string backend,
                                   const std::vector<double>& scaled) {
  ReconstructionResult r;
  r.segment_id = cs.segment_id;
  r.backend = std::move(backend);
  r.values = inverse_rescale<double>(scaled, cs.x_min, cs.x_max);
  return r;
}

}  // namespace detail

/// Linear interpolation between anchors in scaled space, then inverse rescale.
inline ReconstructionResult reconstruct_linear(const CompressedSegment& cs) {
  const auto plan = plan_for(cs);
  return detail::finish(cs, "linear", interp::linear<double>(plan.kept_indices, cs.values_scaled, cs.n_total));
}

inline ReconstructionResult reconstruct_zoh(const CompressedSegment& cs) {
  const auto plan = plan_for(cs);
  return detail::finish(cs, "zoh",
                        interp::zero_order_hold<double>(plan.kept_indices, cs.values_scaled, cs.n_total));
}

/// Natural cubic spline through the anchors, clamped to [0, 1] in scaled
/// space. With fewer than three anchors this is the linear baseline.
inline ReconstructionResult reconstruct_spline(const CompressedSegment& cs) {
  const auto plan = plan_for(cs);
  if (plan.kept_indices.size() < 3) {
    auto r = reconstruct_linear(cs);
    r.backend = "spline";
    return r;
  }
  const auto s = interp::natural_spline<double>(plan.kept_indices, cs.values_scaled, cs.n_total);
  return detail::finish(cs, "spline", clamp_to_unit(s));
}

/// Prompt, ask, parse. One corrective re-prompt on an unparseable reply, then
/// the linear baseline with fell_back set. Transport errors propagate.
inline ReconstructionResult reconstruct_llm(const CompressedSegment& cs, Backend& backend,
                                            const PromptTemplate& tpl, const LlmConfig& cfg,
                                            const Sleeper& sleep = real_sleep) {
  auto bundle = build_prompt(cs, tpl);
  int retries = 0;
  std::string last_reply;
  for (int round = 0; round < 2; ++round) {
    if (round == 1) bundle = with_correction(std::move(bundle));
    const ChatReply reply = complete(bundle, backend, cfg, sleep);
    retries += reply.attempt - 1;
    last_reply = reply.text;
    try {
      const auto parsed = parse_sequence(reply.text, cs.n_total);
      auto r = detail::finish(cs, "llm", clamp_to_unit(parsed));
      r.retries_used = retries;
      r.raw_reply = reply.text;
      return r;
    } catch (const Error& e) {
      if (e.code() != Errc::LengthMismatch && e.code() != Errc::NoNumbersFound && e.code() != Errc::OutOfBand)
        throw;
    }
  }
  auto r = reconstruct_linear(cs);
  r.backend = "llm";
  r.fell_back = true;
  r.retries_used = retries;
  r.raw_reply = last_reply;
  return r;
}

}  // namespace skipzip
