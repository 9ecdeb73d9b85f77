#include "skimzoom/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "skimzoom/util.hpp"

namespace skimzoom {

std::vector<double> group_advantages(const std::vector<double>& rewards) {
  if (rewards.empty()) throw std::invalid_argument("group_advantages: empty reward list");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back(r - mean);
  return out;
}

std::vector<double> batch_normalize(const std::vector<double>& rewards, double eps) {
  if (rewards.empty()) throw std::invalid_argument("batch_normalize: empty reward list");
  if (!(eps > 0.0)) throw std::invalid_argument("batch_normalize: eps must be > 0");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());  // population variance
  double stddev = std::sqrt(var);
  std::vector<double> out;
  out.reserve(rewards.size());
  if (stddev == 0.0) {
    out.assign(rewards.size(), 0.0);
    return out;
  }
  for (double r : rewards) out.push_back((r - mean) / (stddev + eps));
  return out;
}

double sequence_kl(const std::vector<double>& policy_token_logprobs,
                   const std::vector<double>& ref_token_logprobs) {
  if (policy_token_logprobs.empty()) throw std::invalid_argument("sequence_kl: empty logprobs");
  if (policy_token_logprobs.size() != ref_token_logprobs.size()) {
    throw std::invalid_argument("sequence_kl: token logprob lists differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < policy_token_logprobs.size(); ++i) {
    sum += policy_token_logprobs[i] - ref_token_logprobs[i];
  }
  return sum / static_cast<double>(policy_token_logprobs.size());
}

void compute_group_advantages(RolloutGroup& group) {
  std::vector<double> rewards;
  rewards.reserve(group.rollouts.size());
  for (const auto& r : group.rollouts) rewards.push_back(r.reward.r_total);
  group.advantages = group_advantages(rewards);
}

double grpo_objective(std::vector<RolloutGroup> groups, double kl_coef) {
  if (groups.empty()) throw std::invalid_argument("grpo_objective: no groups");

  std::vector<double> group_terms;
  std::vector<double> kl_terms;
  for (auto& g : groups) {
    if (g.rollouts.empty()) throw std::invalid_argument("grpo_objective: empty group");
    if (g.advantages.size() != g.rollouts.size()) compute_group_advantages(g);
    double term = 0.0;
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      const Rollout& r = g.rollouts[i];
      if (!r.policy_logprob_sum) {
        throw std::invalid_argument("grpo_objective: rollout missing policy logprob sum");
      }
      term += g.advantages[i] * *r.policy_logprob_sum;
      if (r.ref_logprob_sum && r.token_count > 0) {
        kl_terms.push_back((*r.policy_logprob_sum - *r.ref_logprob_sum) /
                           static_cast<double>(r.token_count));
      }
    }
    group_terms.push_back(term);
  }

  // Canonical summation order: results must not depend on group arrangement.
  std::sort(group_terms.begin(), group_terms.end());
  std::sort(kl_terms.begin(), kl_terms.end());
  double policy_term = 0.0;
  for (double t : group_terms) policy_term += t;
  policy_term = -policy_term / static_cast<double>(group_terms.size());

  double kl_mean = 0.0;
  if (!kl_terms.empty()) {
    for (double t : kl_terms) kl_mean += t;
    kl_mean /= static_cast<double>(kl_terms.size());
  }
  return policy_term + kl_coef * kl_mean;
}

namespace {

nlohmann::ordered_json reward_to_json(const RewardBreakdown& b) {
  nlohmann::ordered_json j;
  j["tiou"] = b.tiou;
  j["fmt_time"] = b.fmt_time;
  j["fmt_ans"] = b.fmt_ans;
  j["correct"] = b.correct;
  j["r_loc"] = b.r_loc;
  j["r_ans"] = b.r_ans;
  j["r_total"] = b.r_total;
  return j;
}

RewardBreakdown reward_from_json(const nlohmann::json& j) {
  RewardBreakdown b;
  b.tiou = j.value("tiou", 0.0);
  b.fmt_time = j.value("fmt_time", 0.0);
  b.fmt_ans = j.value("fmt_ans", 0.0);
  b.correct = j.value("correct", false);
  b.r_loc = j.value("r_loc", 0.0);
  b.r_ans = j.value("r_ans", 0.0);
  b.r_total = j.value("r_total", 0.0);
  return b;
}

}  // namespace

std::vector<RolloutGroup> read_rollout_groups(const std::filesystem::path& path) {
  std::vector<RolloutGroup> groups;
  std::map<std::string, std::size_t> index_by_prompt;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": bad rollout record: " + e.what());
    }
    std::string prompt_id = j.value("prompt_id", "");
    if (prompt_id.empty()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": rollout record needs a prompt_id");
    }
    Rollout r;
    r.response_text = j.value("response_text", "");
    if (j.contains("reward")) r.reward = reward_from_json(j["reward"]);
    if (j.contains("policy_logprob_sum") && !j["policy_logprob_sum"].is_null()) {
      r.policy_logprob_sum = j["policy_logprob_sum"].get<double>();
    }
    if (j.contains("ref_logprob_sum") && !j["ref_logprob_sum"].is_null()) {
      r.ref_logprob_sum = j["ref_logprob_sum"].get<double>();
    }
    r.token_count = j.value("token_count", 0ll);

    auto it = index_by_prompt.find(prompt_id);
    if (it == index_by_prompt.end()) {
      index_by_prompt.emplace(prompt_id, groups.size());
      groups.push_back(RolloutGroup{prompt_id, {}, {}});
      it = index_by_prompt.find(prompt_id);
    }
    RolloutGroup& group = groups[it->second];
    if (j.contains("advantage") && !j["advantage"].is_null()) {
      group.advantages.push_back(j["advantage"].get<double>());
    }
    group.rollouts.push_back(std::move(r));
  }
  // Advantages only survive when the whole group carries them; a partial set
  // cannot be aligned with its rollouts, so it is treated as absent.
  for (RolloutGroup& g : groups) {
    if (g.advantages.size() != g.rollouts.size()) g.advantages.clear();
  }
  return groups;
}

void write_rollout_groups(const std::filesystem::path& path,
                          const std::vector<RolloutGroup>& groups) {
  std::string out;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      const Rollout& r = g.rollouts[i];
      nlohmann::ordered_json j;
      j["prompt_id"] = g.prompt_id;
      j["response_text"] = r.response_text;
      j["reward"] = reward_to_json(r.reward);
      if (r.policy_logprob_sum) {
        j["policy_logprob_sum"] = *r.policy_logprob_sum;
      } else {
        j["policy_logprob_sum"] = nullptr;
      }
      if (r.ref_logprob_sum) {
        j["ref_logprob_sum"] = *r.ref_logprob_sum;
      } else {
        j["ref_logprob_sum"] = nullptr;
      }
      j["token_count"] = r.token_count;
      if (i < g.advantages.size()) j["advantage"] = g.advantages[i];
      out += j.dump();
      out += '\n';
    }
  }
  write_text_file(path, out);
}

}  // namespace skimzoom
