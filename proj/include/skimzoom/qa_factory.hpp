#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skimzoom/event_graph.hpp"
#include "skimzoom/span.hpp"

namespace skimzoom {

// One span-grounded multiple-choice item.  Plain struct on purpose: records
// read from disk may be broken, and the schema review gate is what decides.
struct QARecord {
  std::string video_id;
  std::string event_id;
  SpanSet time_spans;  // gold spans, stored at two-decimal resolution
  std::string event_description;
  std::string grounding_query;
  std::string question;
  std::map<char, std::string> options;  // exactly A..D once reviewed
  char correct_answer = '\0';
  std::optional<std::string> stage1_reason;  // why these spans
  std::optional<std::string> stage2_reason;  // why this option

  std::string item_id() const { return video_id + ":" + event_id; }
};

// What the question-writing provider returns for one event.  The correct
// option's *text*; its letter is assigned by the balancer, never here.
struct QaDraft {
  std::string grounding_query;
  std::string question;
  std::string correct_option;
  std::optional<std::string> stage1_reason;
  std::optional<std::string> stage2_reason;
};

class QaWriter {
 public:
  virtual ~QaWriter() = default;
  // attempt > 0 signals a retry after a rejected draft (e.g. deictic query).
  virtual QaDraft draft(const EventNode& node, int attempt) = 0;
};

// Deterministic offline writer: templated text built from the event caption,
// free of deictic wording by construction.
class TemplateQaWriter final : public QaWriter {
 public:
  QaDraft draft(const EventNode& node, int attempt) override;
};

// Wordlist the language gate scans for (whole-word / whole-phrase matches,
// case-insensitive): wording that only makes sense while watching the clip.
const std::vector<std::string>& default_deictic_terms();

bool contains_deictic_term(const std::string& text, const std::vector<std::string>& terms);

// Builds one record from an event node.  pool = other events of the same
// video; needs at least 3 with descriptions distinct from the node's, which
// become seed-deterministic distractors.  A draft whose query or question
// carries deictic wording is rebuilt once; a second offense is an error.
QARecord build_record(const EventNode& node, const std::vector<EventNode>& pool,
                      const std::string& video_id, QaWriter& writer, std::uint64_t seed);

// Groups disjoint recurrences of the same event (descriptions matching at or
// above `threshold`) into one multi-span node per group, for QA conversion.
// Non-recurring nodes pass through unchanged; group spans merge sorted.
std::vector<EventNode> group_recurrences(const std::vector<EventNode>& nodes,
                                         TextSimilarityProvider& similarity, double threshold);

// --- Review -------------------------------------------------------------------

enum class GateStatus { Pass, Fail, Skipped };

struct GateVerdict {
  GateStatus status = GateStatus::Skipped;
  std::string reason;
};

struct ReviewReport {
  std::string item_id;
  GateVerdict schema;
  GateVerdict temporal_locality;
  GateVerdict language;
  GateVerdict text_only;
  GateVerdict dedup;

  // Accepted = nothing failed (gates that never ran don't count against).
  bool accepted() const;
};

// Checker providers.  The defaults are the honest offline stand-ins: the
// locality checker waves records through, the text-only checker cannot
// answer anything (so nothing is flagged as text-answerable).
class TemporalLocalityChecker {
 public:
  virtual ~TemporalLocalityChecker() = default;
  virtual GateVerdict check(const QARecord& record) = 0;
};

class TextOnlyChecker {
 public:
  virtual ~TextOnlyChecker() = default;
  // The option the checker would pick from text alone, or nullopt.
  virtual std::optional<char> answer_without_video(const QARecord& record) = 0;
};

// Record-level gates in order: schema -> temporal locality -> language ->
// text-only.  A failed gate short-circuits the rest (they stay Skipped).
// The dedup verdict needs corpus context and is filled by review_dataset.
// Null checkers mean the defaults above.
ReviewReport review_record(const QARecord& record, TemporalLocalityChecker* locality,
                           TextOnlyChecker* text_only,
                           const std::vector<std::string>& deictic_terms);

// Runs review_record over the corpus and fills each report's dedup verdict
// using the same duplicate rule as dedup_and_balance.
std::vector<ReviewReport> review_dataset(const std::vector<QARecord>& records,
                                         TemporalLocalityChecker* locality,
                                         TextOnlyChecker* text_only,
                                         const std::vector<std::string>& deictic_terms,
                                         double dup_threshold);

// --- Dedup, balance, split, stats ----------------------------------------------

// Within each video, drops any record whose question has token-Jaccard >=
// dup_threshold against an earlier kept record, then reassigns answer letters
// by a seeded round-robin so per-letter counts differ by at most one (option
// texts are permuted along with the letters).  Idempotent for a fixed seed.
std::vector<QARecord> dedup_and_balance(std::vector<QARecord> records, double dup_threshold,
                                        std::uint64_t seed);

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Assigns whole videos to train/val/test by seeded stable hash, approximating
// the given ratios.  Ratios must be non-negative and sum to 1; there must be
// at least as many videos as splits with positive ratio.
SplitManifest split_by_video(const std::vector<QARecord>& records,
                             const std::array<double, 3>& ratios, std::uint64_t seed);

struct DatasetStats {
  std::size_t record_count = 0;
  double span_length_mean = 0.0;
  double span_length_median = 0.0;
  double span_length_p25 = 0.0;
  double span_length_p75 = 0.0;
  double span_length_min = 0.0;
  double span_length_max = 0.0;
  double multi_span_fraction = 0.0;
  std::map<std::string, std::size_t> per_video_counts;
  std::map<char, std::size_t> label_histogram;  // sums to record_count
};

DatasetStats dataset_stats(const std::vector<QARecord>& records);

// --- Serialization ---------------------------------------------------------------

nlohmann::ordered_json record_to_json(const QARecord& record);

// Lenient: missing/malformed fields land as defaults plus a schema-error
// note, so review can classify the damage instead of the loader throwing.
struct ParsedRecord {
  QARecord record;
  std::vector<std::string> schema_errors;
};
ParsedRecord record_from_json(const nlohmann::json& j);

// Dataset files are NDJSON, one record per line, span seconds at two
// decimals.  read_dataset validates (throws on any schema error);
// read_dataset_lenient keeps going and returns the error notes.
void write_dataset(const std::filesystem::path& path, const std::vector<QARecord>& records);
std::vector<QARecord> read_dataset(const std::filesystem::path& path);
std::vector<ParsedRecord> read_dataset_lenient(const std::filesystem::path& path);

void write_split_manifest(const std::filesystem::path& path, const SplitManifest& manifest);
SplitManifest read_split_manifest(const std::filesystem::path& path);

nlohmann::ordered_json stats_to_json(const DatasetStats& stats);

}  // namespace skimzoom
