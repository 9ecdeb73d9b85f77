#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "skimzoom/frame_budget.hpp"
#include "skimzoom/interleave.hpp"
#include "skimzoom/qa_factory.hpp"
#include "skimzoom/reward.hpp"

namespace skimzoom {

enum class Stage { Ground, Answer };

// The four harness variants: A = one pass, no timestamps; B = one pass with
// timestamps; C = zoom-style prompt applied to the whole video; D = the full
// skim-then-zoom protocol.  Presets only change prompt assembly and frame
// sampling — scoring and budgets stay identical.
enum class Preset { A, B, C, D };

Preset preset_from_name(const std::string& name);  // "A".."D", throws otherwise
const char* preset_name(Preset p);

// Everything a generation call carries.  This struct *is* the wire envelope;
// request_to_json/request_from_json define its serialized form.
struct BackendRequest {
  Stage stage = Stage::Ground;
  std::string video_id;
  std::string prompt_text;                 // frames + instructions, ready to send
  std::vector<FrameSample> frames;         // manifest refs: index + timestamp
  std::string question;
  std::map<char, std::string> options;
  std::string grounding_query;             // ground stage only
  SpanSet spans;                           // answer stage: spans under consideration
};

struct BackendResponse {
  std::string raw_text;
  // Optional extras a real serving stack may attach; mocks fill them in so
  // the training-side plumbing can be exercised end to end.
  std::optional<double> policy_logprob_sum;
  std::optional<double> ref_logprob_sum;
  long long token_count = 0;
};

nlohmann::ordered_json request_to_json(const BackendRequest& request);
BackendRequest request_from_json(const nlohmann::json& j);
nlohmann::ordered_json response_to_json(const BackendResponse& response);
BackendResponse response_from_json(const nlohmann::json& j);

// Transport failures (connection refused, broken pipe, non-200, unparsable
// reply) — retried with backoff; anything else is a logic error and isn't.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendResponse generate(const BackendRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Answers every request from the gold record: canonical span rendering for
// ground requests, the gold letter for answer requests.  Records are keyed by
// their question + options, the only identity the wire envelope carries.
class GoldEchoBackend final : public Backend {
 public:
  explicit GoldEchoBackend(const std::vector<QARecord>& records);
  BackendResponse generate(const BackendRequest& request) override;
  std::string name() const override { return "gold-echo"; }

 private:
  std::map<std::string, QARecord> by_key_;
};

// Well-formed but content-random responses, seeded: the same request stream
// yields the same responses, run to run and thread count to thread count.
class RandomBackend final : public Backend {
 public:
  RandomBackend(std::uint64_t seed, int max_spans);
  BackendResponse generate(const BackendRequest& request) override;
  std::string name() const override { return "random"; }

 private:
  std::uint64_t seed_;
  int max_spans_;
  std::mutex mu_;
  std::map<std::string, int> calls_per_key_;  // distinguishes repeat samples
};

// Fixed corrupt outputs: tags broken, numbers garbled.  Never crashes the
// pipeline; formats score zero.
class MalformedBackend final : public Backend {
 public:
  BackendResponse generate(const BackendRequest& request) override;
  std::string name() const override { return "malformed"; }
};

// POST {endpoint}/generate with the JSON envelope; expects {"raw_text": ...}.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(const std::string& endpoint);  // e.g. "http://127.0.0.1:8311"
  BackendResponse generate(const BackendRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  std::string host_;
  int port_ = 0;
  std::string path_prefix_;
};

// One JSON envelope per line over a child process's stdin/stdout.
class PipeBackend final : public Backend {
 public:
  explicit PipeBackend(const std::string& command);
  ~PipeBackend() override;  // out of line: Subprocess is incomplete here
  BackendResponse generate(const BackendRequest& request) override;
  std::string name() const override { return "pipe"; }

 private:
  std::mutex mu_;
  std::unique_ptr<class Subprocess> child_;
};

struct PipelineOptions {
  BudgetConfig budget;
  RewardConfig reward;
  double gamma = 0.3;            // weight used when scoring against gold
  Preset preset = Preset::D;
  int max_retries = 2;           // transport retries after the first attempt
  int backoff_ms = 100;          // doubles per retry
  std::uint64_t seed = 0;
  double teacher_force_ratio = 0.0;  // rollout generation only; see run_pipeline
  std::function<void(const BackendRequest&)> request_observer;  // e.g. tracing
};

// One stage call: assembles the prompt, samples frames, calls the backend
// (with retries), parses.  Exposed separately for tests and tooling.
struct StageOutcome {
  SpanSet spans;                  // ground: normalized, clipped, capped
  std::optional<char> answer;     // answer stage
  InterleavedResponse parsed;
  BackendResponse backend_response;
  int frames_used = 0;
  int shortfall = 0;
  bool transport_failed = false;  // true after retries were exhausted
};

StageOutcome run_stage1(const FrameSource& source, const QARecord& record, Backend& backend,
                        const PipelineOptions& options);
StageOutcome run_stage2(const FrameSource& source, const SpanSet& spans, const QARecord& record,
                        Backend& backend, const PipelineOptions& options);

struct PipelineResult {
  std::string item_id;
  SpanSet pred_spans;
  std::optional<char> answer;
  std::string stage1_raw;
  std::string stage2_raw;
  std::string scored_text;  // exactly what the reward was computed over
  std::optional<RewardBreakdown> reward;
  // Summed over the stages when every stage reported one; for rollout export.
  std::optional<double> policy_logprob_sum;
  std::optional<double> ref_logprob_sum;
  long long token_count = 0;
  int n_g_used = 0;
  int n_l_used = 0;
  int shortfall = 0;
  bool fallback = false;  // stage 1 gave no spans; zoomed the whole timeline
  bool failure = false;   // a stage lost its transport even after retries
};

// The full protocol for one record under the configured preset.  Stage-1
// emptiness falls back to a uniform whole-timeline zoom (flagged); frames
// used never exceed n_g + n_l and the accounting identity
// n_g_used + n_l_used == n_g + n_l - shortfall holds on every result.
PipelineResult run_pipeline(const FrameSource& source, const QARecord& record, Backend& backend,
                            const PipelineOptions& options);

// Batch driver: records run independently with at most `jobs` in flight;
// results land in input order regardless of scheduling.
std::vector<PipelineResult> run_pipeline_batch(
    const std::map<std::string, FrameSource>& sources_by_video,
    const std::vector<QARecord>& records, Backend& backend, const PipelineOptions& options,
    int jobs);

// Results file: one JSON object per line, usable directly as the prediction
// file for both grounding and QA evaluation.
void write_results(const std::filesystem::path& path, const std::vector<PipelineResult>& results);

}  // namespace skimzoom
