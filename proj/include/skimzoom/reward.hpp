#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "skimzoom/interleave.hpp"
#include "skimzoom/span.hpp"

namespace skimzoom {

struct ShapingThreshold {
  double threshold = 0.0;  // fires when tiou >= threshold
  double bonus = 0.0;
};

struct RewardConfig {
  double alpha = 0.1;   // weight of the timestamp-format term inside R_loc
  double beta = 0.1;    // weight of the answer-format term inside R_ans
  double gamma0 = 0.3;  // answer weight at step 0
  double gamma1 = 0.7;  // answer weight after the ramp
  long long ramp_steps = 1000;

  // Off by default.  When non-empty, R_loc uses the shaped IoU instead of
  // the raw one (the breakdown still records the raw tIoU).
  std::vector<ShapingThreshold> shaping_thresholds;

  // Mild length penalty on rationale text: rate per character beyond the cap,
  // subtracted from the total and clamped at 0.  Rate 0 disables it.
  double length_penalty_rate = 1e-4;
  long long length_penalty_cap_chars = 2000;

  void validate() const;
};

struct RewardBreakdown {
  double tiou = 0.0;      // raw multi-span temporal IoU
  double fmt_time = 0.0;
  double fmt_ans = 0.0;
  bool correct = false;
  double r_loc = 0.0;
  double r_ans = 0.0;
  double r_total = 0.0;
};

// R_loc = (1 - alpha) * tiou + alpha * fmt_time.  Requires all inputs in
// [0, 1]; the gold set the tiou came from must have been non-empty.
double loc_reward(double tiou, double fmt_time, double alpha);

// R_ans = (1 - beta) * [answer == gold] + beta * fmt_ans.
double ans_reward(std::optional<char> answer, char gold_answer, double fmt_ans, double beta);

// R = (1 - gamma) * r_loc + gamma * r_ans.  All inputs in [0, 1].
double composite_reward(double r_loc, double r_ans, double gamma);

// Linear ramp gamma0 -> gamma1 over ramp_steps, constant gamma1 afterwards.
// A zero-length ramp sits at gamma1 from the start.
double gamma_schedule(long long step, const RewardConfig& config);

// Raw IoU plus the bonus of every threshold at or below it, clamped to
// [0, 1].  Zero IoU earns nothing regardless of thresholds.
double shaped_tvg_reward(double tiou, const std::vector<ShapingThreshold>& thresholds);

// Full per-response scoring: parse-level format scores, tIoU of the
// normalized parsed spans against gold, and the weighted composition at the
// given gamma.  gold_spans must be non-empty; duration_s > 0.
RewardBreakdown score_response(const InterleavedResponse& response, const SpanSet& gold_spans,
                               char gold_answer, double duration_s, int m_max,
                               const RewardConfig& config, double gamma);

}  // namespace skimzoom
