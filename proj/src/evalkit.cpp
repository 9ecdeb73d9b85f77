#include "skimzoom/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "skimzoom/util.hpp"

namespace skimzoom {

namespace {

using nlohmann::json;

double clamp01_checked(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(what + " outside [0,1]");
  }
  return v;
}

// Best single-span tIoU: each predicted span alone against the gold union.
double best_single_span_iou(const SpanSet& pred, const SpanSet& gold) {
  double best = 0.0;
  for (const Span& s : pred.spans()) {
    SpanSet one = SpanSet::from_sorted({s});
    best = std::max(best, multi_span_tiou(one, gold));
  }
  return best;
}

std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": not a JSON object");
    }
    Prediction p;
    if (!j.contains("item_id") || !j["item_id"].is_string()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": missing item_id");
    }
    p.item_id = j["item_id"].get<std::string>();
    std::vector<std::pair<double, double>> spans;
    if (j.contains("spans") && j["spans"].is_array()) {
      for (const auto& pair : j["spans"]) {
        if (!pair.is_array() || pair.size() != 2) {
          throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                   ": span must be [start, end]");
        }
        spans.emplace_back(pair[0].get<double>(), pair[1].get<double>());
      }
    }
    // Predictions may be unsorted or touching; canonicalize without clipping
    // by treating the latest predicted end as the horizon.
    double horizon = 1.0;
    for (const auto& [a, b] : spans) {
      if (std::isfinite(b)) horizon = std::max(horizon, b);
    }
    p.spans = normalize_spans(spans, horizon).spans;
    if (j.contains("answer") && j["answer"].is_string()) {
      const std::string a = j["answer"].get<std::string>();
      if (a.size() == 1 && a[0] >= 'A' && a[0] <= 'D') {
        p.answer = a[0];
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::map<std::string, std::string> read_task_labels(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("item_id") || !j.contains("task")) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected {\"item_id\", \"task\"}");
    }
    out[j["item_id"].get<std::string>()] = j["task"].get<std::string>();
  }
  return out;
}

namespace {

// Shared id bookkeeping: every gold item appears once; predictions must
// match a gold id and must not repeat.  Returns pred-by-id.
std::map<std::string, const Prediction*> index_predictions(
    const std::vector<Prediction>& preds, const std::vector<QARecord>& gold) {
  std::set<std::string> gold_ids;
  for (const QARecord& rec : gold) {
    if (!gold_ids.insert(rec.item_id()).second) {
      throw std::runtime_error("duplicate gold item id: " + rec.item_id());
    }
  }
  std::map<std::string, const Prediction*> by_id;
  for (const Prediction& p : preds) {
    if (gold_ids.count(p.item_id) == 0) {
      throw std::runtime_error("prediction for unknown item id: " + p.item_id);
    }
    if (!by_id.emplace(p.item_id, &p).second) {
      throw std::runtime_error("duplicate prediction for item id: " + p.item_id);
    }
  }
  return by_id;
}

}  // namespace

EvalReport eval_grounding(const std::vector<Prediction>& preds,
                          const std::vector<QARecord>& gold,
                          const std::vector<double>& thresholds, bool single_best) {
  if (gold.empty()) {
    throw std::invalid_argument("no gold items to evaluate");
  }
  for (double tau : thresholds) {
    if (!(tau > 0.0 && tau < 1.0)) {
      throw std::invalid_argument("recall threshold must lie in (0,1)");
    }
  }
  const auto by_id = index_predictions(preds, gold);

  // Sort by item id so the result is independent of input file order.
  std::vector<const QARecord*> ordered;
  ordered.reserve(gold.size());
  for (const QARecord& rec : gold) {
    ordered.push_back(&rec);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const QARecord* a, const QARecord* b) { return a->item_id() < b->item_id(); });

  EvalReport report;
  report.item_count = gold.size();
  std::vector<double> ious;
  ious.reserve(gold.size());
  for (const QARecord* rec : ordered) {
    const auto it = by_id.find(rec->item_id());
    if (it == by_id.end() || it->second->spans.empty()) {
      ++report.missing_predictions;
      ious.push_back(0.0);
      continue;
    }
    const double iou = single_best ? best_single_span_iou(it->second->spans, rec->time_spans)
                                   : multi_span_tiou(it->second->spans, rec->time_spans);
    ious.push_back(clamp01_checked(iou, "tIoU"));
  }
  for (double tau : thresholds) {
    report.recall_at[tau] = recall_at_iou(ious, tau);
  }
  report.miou = mean_iou(ious);
  return report;
}

EvalReport eval_qa(const std::vector<Prediction>& preds, const std::vector<QARecord>& gold,
                   const std::map<std::string, std::string>& task_by_item) {
  if (gold.empty()) {
    throw std::invalid_argument("no gold items to evaluate");
  }
  const auto by_id = index_predictions(preds, gold);

  std::vector<const QARecord*> ordered;
  ordered.reserve(gold.size());
  for (const QARecord& rec : gold) {
    ordered.push_back(&rec);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const QARecord* a, const QARecord* b) { return a->item_id() < b->item_id(); });

  EvalReport report;
  report.item_count = gold.size();
  std::size_t correct = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> task_counts;  // correct, total
  for (const QARecord* rec : ordered) {
    const auto it = by_id.find(rec->item_id());
    bool hit = false;
    if (it == by_id.end() || !it->second->answer.has_value()) {
      ++report.missing_predictions;
    } else {
      hit = *it->second->answer == rec->correct_answer;
    }
    correct += hit ? 1 : 0;
    const auto task_it = task_by_item.find(rec->item_id());
    if (task_it != task_by_item.end()) {
      auto& [task_correct, task_total] = task_counts[task_it->second];
      task_correct += hit ? 1 : 0;
      ++task_total;
    }
  }
  report.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(gold.size());
  if (!task_counts.empty()) {
    double sum = 0.0;
    for (const auto& [task, counts] : task_counts) {
      const double acc =
          100.0 * static_cast<double>(counts.first) / static_cast<double>(counts.second);
      report.per_task_accuracy[task] = acc;
      sum += acc;
    }
    report.macro_avg = sum / static_cast<double>(task_counts.size());
  }
  return report;
}

EvalReport eval_grounding_files(const std::filesystem::path& pred_path,
                                const std::filesystem::path& gold_path,
                                const std::vector<double>& thresholds, bool single_best) {
  return eval_grounding(read_predictions(pred_path), read_dataset(gold_path), thresholds,
                        single_best);
}

EvalReport eval_qa_files(const std::filesystem::path& pred_path,
                         const std::filesystem::path& gold_path,
                         const std::optional<std::filesystem::path>& tasks_path) {
  std::map<std::string, std::string> tasks;
  if (tasks_path.has_value()) {
    tasks = read_task_labels(*tasks_path);
  }
  return eval_qa(read_predictions(pred_path), read_dataset(gold_path), tasks);
}

namespace {

std::vector<std::pair<std::string, std::string>> report_rows(const EvalReport& report) {
  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back("items", std::to_string(report.item_count));
  rows.emplace_back("missing_predictions", std::to_string(report.missing_predictions));
  for (const auto& [tau, value] : report.recall_at) {
    rows.emplace_back("recall@" + two_decimals(tau), two_decimals(value));
  }
  if (report.miou.has_value()) {
    rows.emplace_back("mIoU", two_decimals(*report.miou));
  }
  if (report.accuracy.has_value()) {
    rows.emplace_back("accuracy", two_decimals(*report.accuracy));
  }
  for (const auto& [task, value] : report.per_task_accuracy) {
    rows.emplace_back("accuracy[" + task + "]", two_decimals(value));
  }
  if (report.macro_avg.has_value()) {
    rows.emplace_back("macro_avg", two_decimals(*report.macro_avg));
  }
  return rows;
}

}  // namespace

std::string format_report(const EvalReport& report) {
  const auto rows = report_rows(report);
  std::size_t width = 0;
  for (const auto& [name, value] : rows) {
    width = std::max(width, name.size());
  }
  std::ostringstream out;
  for (const auto& [name, value] : rows) {
    out << name << std::string(width - name.size() + 2, ' ') << value << '\n';
  }
  return out.str();
}

std::string report_to_ndjson(const EvalReport& report) {
  std::ostringstream out;
  for (const auto& [name, value] : report_rows(report)) {
    nlohmann::ordered_json j;
    j["metric"] = name;
    // Count rows stay integers; metric rows carry two-decimal values.
    if (name == "items" || name == "missing_predictions") {
      j["value"] = std::stoull(value);
    } else {
      j["value"] = std::stod(value);
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace skimzoom
