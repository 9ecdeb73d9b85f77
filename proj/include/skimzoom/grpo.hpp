#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skimzoom/interleave.hpp"
#include "skimzoom/reward.hpp"

namespace skimzoom {

// One sampled response for one prompt, with whatever the sampler knew about
// it.  The policy itself lives elsewhere — only its log-probabilities pass
// through here, and they may be absent on mock-generated rollouts.
struct Rollout {
  std::string response_text;
  RewardBreakdown reward;
  std::optional<double> policy_logprob_sum;
  std::optional<double> ref_logprob_sum;
  long long token_count = 0;
};

// All rollouts that share a prompt.  advantages is filled by
// compute_group_advantages and always sums to ~0 afterwards.
struct RolloutGroup {
  std::string prompt_id;
  std::vector<Rollout> rollouts;
  std::vector<double> advantages;
};

// A_i = R_i - mean(R).  Sum of the result is zero up to rounding; adding a
// constant to every reward leaves it unchanged.  Empty input -> error.
std::vector<double> group_advantages(const std::vector<double>& rewards);

// Per-batch reward normalization: (R - mean) / (population stddev + eps).
// A constant batch maps to all zeros.  eps must be > 0.
std::vector<double> batch_normalize(const std::vector<double>& rewards, double eps = 1e-8);

// First-order sequence KL estimate from per-token logprobs:
// mean(policy - ref).  Lists must be equally sized and non-empty.
double sequence_kl(const std::vector<double>& policy_token_logprobs,
                   const std::vector<double>& ref_token_logprobs);

// Fills group.advantages from rollout rewards (r_total).
void compute_group_advantages(RolloutGroup& group);

// L = -(1/|groups|) * sum over groups of sum_i A_i * policy_logprob_sum_i
//     + kl_coef * mean per-rollout sequence KL (only rollouts carrying both
//       logprob sums and a token count contribute; if none do, the KL term
//       is zero).
// Every rollout needs advantages (computed here if missing) and a policy
// logprob sum — a missing one is an error.  Group and rollout contributions
// are summed in a canonical order so the result does not depend on how the
// caller arranged the groups.
double grpo_objective(std::vector<RolloutGroup> groups, double kl_coef);

// Rollout batches travel as line-delimited JSON: one record per rollout with
// fields {prompt_id, response_text, reward{...}, policy_logprob_sum,
// ref_logprob_sum, token_count, advantage?}.  Groups preserve first-seen
// prompt order.
std::vector<RolloutGroup> read_rollout_groups(const std::filesystem::path& path);
void write_rollout_groups(const std::filesystem::path& path,
                          const std::vector<RolloutGroup>& groups);

}  // namespace skimzoom
