#include "skimzoom/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace skimzoom {

namespace {
void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
  }
}
}  // namespace

void RewardConfig::validate() const {
  check_unit(alpha, "alpha");
  check_unit(beta, "beta");
  check_unit(gamma0, "gamma0");
  check_unit(gamma1, "gamma1");
  if (ramp_steps < 0) throw std::invalid_argument("ramp_steps must be >= 0");
  double prev = -1.0;
  for (const auto& t : shaping_thresholds) {
    check_unit(t.threshold, "shaping threshold");
    if (t.bonus < 0.0) throw std::invalid_argument("shaping bonus must be >= 0");
    if (t.threshold <= prev) {
      throw std::invalid_argument("shaping thresholds must strictly ascend");
    }
    prev = t.threshold;
  }
  if (length_penalty_rate < 0.0) throw std::invalid_argument("length penalty rate must be >= 0");
  if (length_penalty_cap_chars < 0) {
    throw std::invalid_argument("length penalty cap must be >= 0");
  }
}

double loc_reward(double tiou, double fmt_time, double alpha) {
  check_unit(tiou, "tiou");
  check_unit(fmt_time, "fmt_time");
  check_unit(alpha, "alpha");
  return (1.0 - alpha) * tiou + alpha * fmt_time;
}

double ans_reward(std::optional<char> answer, char gold_answer, double fmt_ans, double beta) {
  check_unit(fmt_ans, "fmt_ans");
  check_unit(beta, "beta");
  double correct = (answer && *answer == gold_answer) ? 1.0 : 0.0;
  return (1.0 - beta) * correct + beta * fmt_ans;
}

double composite_reward(double r_loc, double r_ans, double gamma) {
  check_unit(r_loc, "r_loc");
  check_unit(r_ans, "r_ans");
  check_unit(gamma, "gamma");
  return (1.0 - gamma) * r_loc + gamma * r_ans;
}

double gamma_schedule(long long step, const RewardConfig& config) {
  if (step < 0) throw std::invalid_argument("gamma_schedule: step must be >= 0");
  if (config.ramp_steps == 0 || step >= config.ramp_steps) return config.gamma1;
  double frac = static_cast<double>(step) / static_cast<double>(config.ramp_steps);
  return config.gamma0 + (config.gamma1 - config.gamma0) * frac;
}

double shaped_tvg_reward(double tiou, const std::vector<ShapingThreshold>& thresholds) {
  check_unit(tiou, "tiou");
  if (tiou <= 0.0) return 0.0;
  double shaped = tiou;
  for (const auto& t : thresholds) {
    if (t.threshold <= tiou) shaped += t.bonus;
  }
  return std::clamp(shaped, 0.0, 1.0);
}

RewardBreakdown score_response(const InterleavedResponse& response, const SpanSet& gold_spans,
                               char gold_answer, double duration_s, int m_max,
                               const RewardConfig& config, double gamma) {
  if (gold_spans.empty()) throw std::invalid_argument("score_response: gold spans are empty");
  config.validate();
  check_unit(gamma, "gamma");

  RewardBreakdown b;
  b.fmt_time = fmt_time_score(response, duration_s, m_max);
  b.fmt_ans = fmt_ans_score(response);
  b.correct = response.answer && *response.answer == gold_answer;

  SpanSet pred = normalize_spans(response.parsed_spans(), duration_s).spans;
  b.tiou = multi_span_tiou(pred, gold_spans);

  double loc_iou =
      config.shaping_thresholds.empty() ? b.tiou : shaped_tvg_reward(b.tiou, config.shaping_thresholds);
  b.r_loc = loc_reward(loc_iou, b.fmt_time, config.alpha);
  b.r_ans = ans_reward(response.answer, gold_answer, b.fmt_ans, config.beta);
  b.r_total = composite_reward(b.r_loc, b.r_ans, gamma);

  if (config.length_penalty_rate > 0.0) {
    long long over = static_cast<long long>(response.rationale_text.size()) -
                     config.length_penalty_cap_chars;
    if (over > 0) {
      b.r_total = std::max(0.0, b.r_total - config.length_penalty_rate * static_cast<double>(over));
    }
  }
  return b;
}

}  // namespace skimzoom
