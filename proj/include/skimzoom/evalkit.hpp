#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skimzoom/qa_factory.hpp"
#include "skimzoom/span.hpp"

namespace skimzoom {

// A prediction line: {"item_id": ..., "spans": [[a,b],...], "answer": "B"}.
// Extra fields are tolerated, so pipeline results files work directly.
struct Prediction {
  std::string item_id;
  SpanSet spans;
  std::optional<char> answer;
};

std::vector<Prediction> read_predictions(const std::filesystem::path& path);

struct EvalReport {
  std::size_t item_count = 0;
  std::size_t missing_predictions = 0;        // gold items nobody predicted
  std::map<double, double> recall_at;         // threshold -> percentage
  std::optional<double> miou;                 // percentage
  std::optional<double> accuracy;             // percentage
  std::map<std::string, double> per_task_accuracy;
  std::optional<double> macro_avg;            // unweighted mean over tasks
};

// Grounding metrics over matched (pred, gold) pairs: per-item multi-span
// tIoU, Recall@tau for each threshold (inclusive), and mIoU, all x100.
// Items without a prediction score zero.  A prediction whose id matches no
// gold item, or a duplicated prediction id, is an error.  With single_best,
// an item's score is the best single predicted span against the gold union
// instead of the union-vs-union IoU.
EvalReport eval_grounding(const std::vector<Prediction>& preds,
                          const std::vector<QARecord>& gold,
                          const std::vector<double>& thresholds, bool single_best = false);

// Answer accuracy; with task labels also per-task accuracy and their
// unweighted mean.  Missing predictions count as wrong.  Same id rules.
EvalReport eval_qa(const std::vector<Prediction>& preds, const std::vector<QARecord>& gold,
                   const std::map<std::string, std::string>& task_by_item = {});

// File-level fronts.  Gold files are dataset NDJSON; a tasks file is NDJSON
// of {"item_id": ..., "task": ...}.
EvalReport eval_grounding_files(const std::filesystem::path& pred_path,
                                const std::filesystem::path& gold_path,
                                const std::vector<double>& thresholds, bool single_best = false);
EvalReport eval_qa_files(const std::filesystem::path& pred_path,
                         const std::filesystem::path& gold_path,
                         const std::optional<std::filesystem::path>& tasks_path);

std::map<std::string, std::string> read_task_labels(const std::filesystem::path& path);

// Aligned two-column text table, metric values at two decimals.
std::string format_report(const EvalReport& report);

// Machine form: one {"metric": ..., "value": ...} object per line.
std::string report_to_ndjson(const EvalReport& report);

}  // namespace skimzoom
