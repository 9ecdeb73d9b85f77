#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skimzoom/frame_budget.hpp"
#include "skimzoom/reward.hpp"

namespace skimzoom {

struct GrpoConfig {
  double eps = 1e-8;
  double kl_coef = 0.0;
  int group_size = 3;
  bool normalize = false;           // batch-normalize rewards before advantages
  double teacher_force_ratio = 0.5; // fraction of rollouts grounded with gold spans
  void validate() const;
};

struct DatasetConfig {
  int n_videos = 20;
  double min_duration_s = 120.0;
  double max_duration_s = 300.0;
  double fps = 4.0;
  double chunk_len_s = 3.0;
  int min_events = 4;
  int max_events = 8;
  double recurrence_prob = 0.25;
  double merge_threshold = 0.85;  // adjacent-chunk similarity join point
  double dup_threshold = 0.8;     // question near-duplicate Jaccard
  double link_threshold = 0.75;   // entity clustering link point
  double train_ratio = 0.90;
  double val_ratio = 0.05;
  double test_ratio = 0.05;
  void validate() const;
};

struct BackendConfig {
  std::string kind = "gold";  // gold | random | malformed | http | pipe
  std::string endpoint;       // http kind: base URL
  std::string command;        // pipe kind: shell command
  int retries = 2;
  int backoff_ms = 100;
  void validate() const;
};

struct EvalConfig {
  std::vector<double> thresholds = {0.3, 0.5, 0.7};
  bool single_best = false;
  void validate() const;
};

struct RunConfig {
  BudgetConfig budget;
  RewardConfig reward;
  GrpoConfig grpo;
  DatasetConfig dataset;
  BackendConfig backend;
  EvalConfig eval;
  std::optional<std::uint64_t> seed;
  void validate() const;
};

// INI text with [budget] [reward] [grpo] [dataset] [backend] [eval] sections
// plus a top-level (or [run]) "seed" key.  Unknown sections or keys are
// errors, as are values that do not parse as the key's type.  `origin`
// names the source in error messages.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// Apply "section.key=value" overrides (e.g. from command-line flags) on top
// of a parsed config.  Same key rules as the file.
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace skimzoom
