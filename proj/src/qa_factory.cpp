#include "skimzoom/qa_factory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "skimzoom/util.hpp"

namespace skimzoom {

namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool word_boundary_at(const std::string& text, std::size_t pos) {
  if (pos == 0 || pos >= text.size()) return true;
  auto is_word = [](unsigned char c) { return std::isalnum(c) != 0; };
  return !is_word(text[pos - 1]) || !is_word(text[pos]);
}

}  // namespace

QaDraft TemplateQaWriter::draft(const EventNode& node, int /*attempt*/) {
  QaDraft d;
  d.grounding_query = "Locate the moments where " + node.description + ".";
  d.question = "Which activity matches the grounded moments: " + node.description + "?";
  d.correct_option = node.description;
  d.stage1_reason = "The described activity is visible only inside the annotated spans.";
  d.stage2_reason = "The frames inside the grounded spans show: " + node.description + ".";
  return d;
}

const std::vector<std::string>& default_deictic_terms() {
  static const std::vector<std::string> kTerms = {
      "this clip", "this moment", "this video", "the clip", "here", "now"};
  return kTerms;
}

bool contains_deictic_term(const std::string& text, const std::vector<std::string>& terms) {
  std::string hay = lowercase(text);
  for (const auto& term : terms) {
    std::string needle = lowercase(term);
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
      if (word_boundary_at(hay, pos) && word_boundary_at(hay, pos + needle.size())) {
        return true;
      }
      ++pos;
    }
  }
  return false;
}

QARecord build_record(const EventNode& node, const std::vector<EventNode>& pool,
                      const std::string& video_id, QaWriter& writer, std::uint64_t seed) {
  if (node.spans.empty()) throw std::invalid_argument("build_record: node has no spans");
  if (video_id.empty()) throw std::invalid_argument("build_record: empty video id");

  // Distinct distractor descriptions from the rest of the video.
  std::vector<std::string> distractor_pool;
  std::set<std::string> seen{node.description};
  for (const auto& other : pool) {
    if (other.event_id == node.event_id) continue;
    if (seen.insert(other.description).second) distractor_pool.push_back(other.description);
  }
  if (distractor_pool.size() < 3) {
    throw std::invalid_argument("build_record: need at least 3 distinct other events in " +
                                video_id);
  }

  QaDraft d = writer.draft(node, 0);
  const auto& deictic = default_deictic_terms();
  if (contains_deictic_term(d.grounding_query, deictic) ||
      contains_deictic_term(d.question, deictic)) {
    d = writer.draft(node, 1);  // one rebuild, then give up
    if (contains_deictic_term(d.grounding_query, deictic) ||
        contains_deictic_term(d.question, deictic)) {
      throw std::runtime_error("build_record: provider keeps emitting deictic wording for " +
                               node.event_id);
    }
  }

  std::uint64_t record_seed = mix_seed(seed, video_id + "/" + node.event_id);
  std::mt19937_64 rng(record_seed);

  // Pick 3 distractors seed-deterministically.
  std::vector<std::string> distractors;
  {
    std::vector<std::size_t> order(distractor_pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < 3; ++i) distractors.push_back(distractor_pool[order[i]]);
  }

  QARecord rec;
  rec.video_id = video_id;
  rec.event_id = node.event_id;
  // Gold spans live on the two-decimal grid the output grammar speaks.
  {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& s : node.spans.spans()) {
      pairs.emplace_back(round_two_decimals(s.start_s), round_two_decimals(s.end_s));
    }
    std::vector<Span> spans;
    for (auto& [a, b] : pairs) spans.push_back(Span{a, b});
    rec.time_spans = SpanSet::from_sorted(std::move(spans));
  }
  rec.event_description = node.description;
  rec.grounding_query = d.grounding_query;
  rec.question = d.question;
  rec.stage1_reason = d.stage1_reason;
  rec.stage2_reason = d.stage2_reason;

  // Provisional letter placement; the balancer owns the final assignment.
  int correct_slot = static_cast<int>(rng() % 4);
  std::vector<std::string> texts = std::move(distractors);
  texts.insert(texts.begin() + correct_slot, d.correct_option);
  for (int i = 0; i < 4; ++i) rec.options[static_cast<char>('A' + i)] = texts[i];
  rec.correct_answer = static_cast<char>('A' + correct_slot);
  return rec;
}

std::vector<EventNode> group_recurrences(const std::vector<EventNode>& nodes,
                                         TextSimilarityProvider& similarity, double threshold) {
  std::vector<EventNode> out;
  std::vector<bool> used(nodes.size(), false);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (used[i]) continue;
    std::vector<Span> spans(nodes[i].spans.spans());
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (used[j]) continue;
      if (similarity.similarity(nodes[i].description, nodes[j].description) >= threshold) {
        for (const auto& s : nodes[j].spans.spans()) spans.push_back(s);
        used[j] = true;
      }
    }
    EventNode merged = nodes[i];
    std::sort(spans.begin(), spans.end(),
              [](const Span& a, const Span& b) { return a.start_s < b.start_s; });
    // Fuse overlapping or abutting occurrences so the result stays disjoint.
    std::vector<Span> fused;
    for (const auto& s : spans) {
      if (!fused.empty() && s.start_s <= fused.back().end_s) {
        fused.back().end_s = std::max(fused.back().end_s, s.end_s);
      } else {
        fused.push_back(s);
      }
    }
    merged.spans = SpanSet::from_sorted(std::move(fused));
    out.push_back(std::move(merged));
  }
  return out;
}

bool ReviewReport::accepted() const {
  for (const GateVerdict* v : {&schema, &temporal_locality, &language, &text_only, &dedup}) {
    if (v->status == GateStatus::Fail) return false;
  }
  return true;
}

namespace {

class DefaultLocalityChecker final : public TemporalLocalityChecker {
 public:
  GateVerdict check(const QARecord&) override {
    return {GateStatus::Pass, "no locality objection"};
  }
};

class DefaultTextOnlyChecker final : public TextOnlyChecker {
 public:
  std::optional<char> answer_without_video(const QARecord&) override { return std::nullopt; }
};

std::vector<std::string> schema_problems(const QARecord& r) {
  std::vector<std::string> problems;
  if (r.video_id.empty()) problems.push_back("video_id missing");
  if (r.event_id.empty()) problems.push_back("event_id missing");
  if (r.time_spans.empty()) problems.push_back("time_spans missing or empty");
  if (r.grounding_query.empty()) problems.push_back("grounding_query missing");
  if (r.question.empty()) problems.push_back("question missing");
  if (r.options.size() != 4) {
    problems.push_back("options must map exactly A..D");
  } else {
    std::set<std::string> texts;
    for (char c : {'A', 'B', 'C', 'D'}) {
      auto it = r.options.find(c);
      if (it == r.options.end() || it->second.empty()) {
        problems.push_back(std::string("option ") + c + " missing or empty");
      } else if (!texts.insert(it->second).second) {
        problems.push_back("options contain duplicate text");
      }
    }
  }
  if (r.options.find(r.correct_answer) == r.options.end()) {
    problems.push_back("correct_answer does not name an option");
  }
  return problems;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

ReviewReport review_record(const QARecord& record, TemporalLocalityChecker* locality,
                           TextOnlyChecker* text_only,
                           const std::vector<std::string>& deictic_terms) {
  DefaultLocalityChecker default_locality;
  DefaultTextOnlyChecker default_text_only;
  if (!locality) locality = &default_locality;
  if (!text_only) text_only = &default_text_only;

  ReviewReport report;
  report.item_id = record.item_id();

  auto problems = schema_problems(record);
  if (!problems.empty()) {
    report.schema = {GateStatus::Fail, join(problems, "; ")};
    return report;  // later gates skipped
  }
  report.schema = {GateStatus::Pass, ""};

  report.temporal_locality = locality->check(record);
  if (report.temporal_locality.status == GateStatus::Fail) return report;

  std::vector<std::string> hits;
  for (const auto& [field, text] :
       {std::pair<const char*, const std::string&>{"grounding_query", record.grounding_query},
        std::pair<const char*, const std::string&>{"question", record.question}}) {
    if (contains_deictic_term(text, deictic_terms)) hits.push_back(field);
  }
  if (!hits.empty()) {
    report.language = {GateStatus::Fail, "deictic wording in " + join(hits, ", ")};
    return report;
  }
  report.language = {GateStatus::Pass, ""};

  auto answered = text_only->answer_without_video(record);
  if (answered && *answered == record.correct_answer) {
    report.text_only = {GateStatus::Fail, "answerable from text alone"};
    return report;
  }
  report.text_only = {GateStatus::Pass, ""};
  return report;
}

namespace {

// Indexes of records that survive the per-video duplicate scan.
std::vector<bool> dedup_keep_mask(const std::vector<QARecord>& records, double dup_threshold) {
  std::vector<bool> keep(records.size(), true);
  std::map<std::string, std::vector<std::size_t>> kept_by_video;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& kept = kept_by_video[records[i].video_id];
    for (std::size_t j : kept) {
      if (token_jaccard(records[i].question, records[j].question) >= dup_threshold) {
        keep[i] = false;
        break;
      }
    }
    if (keep[i]) kept.push_back(i);
  }
  return keep;
}

}  // namespace

std::vector<ReviewReport> review_dataset(const std::vector<QARecord>& records,
                                         TemporalLocalityChecker* locality,
                                         TextOnlyChecker* text_only,
                                         const std::vector<std::string>& deictic_terms,
                                         double dup_threshold) {
  std::vector<ReviewReport> reports;
  reports.reserve(records.size());
  for (const auto& r : records) {
    reports.push_back(review_record(r, locality, text_only, deictic_terms));
  }
  auto keep = dedup_keep_mask(records, dup_threshold);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (reports[i].schema.status != GateStatus::Pass) continue;  // gate order preserved
    reports[i].dedup = keep[i]
                           ? GateVerdict{GateStatus::Pass, ""}
                           : GateVerdict{GateStatus::Fail, "near-duplicate of an earlier question"};
  }
  return reports;
}

std::vector<QARecord> dedup_and_balance(std::vector<QARecord> records, double dup_threshold,
                                        std::uint64_t seed) {
  if (!(dup_threshold > 0.0 && dup_threshold <= 1.0)) {
    throw std::invalid_argument("dedup_and_balance: threshold must lie in (0,1]");
  }
  auto keep = dedup_keep_mask(records, dup_threshold);
  std::vector<QARecord> kept;
  kept.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) kept.push_back(std::move(records[i]));
  }

  // Seeded round-robin over a shuffled letter cycle: counts differ by <= 1.
  std::array<char, 4> cycle{'A', 'B', 'C', 'D'};
  std::mt19937_64 rng(mix_seed(seed, "label-balance"));
  std::shuffle(cycle.begin(), cycle.end(), rng);
  std::size_t offset = rng() % 4;

  for (std::size_t i = 0; i < kept.size(); ++i) {
    QARecord& r = kept[i];
    char target = cycle[(offset + i) % 4];
    if (r.options.size() != 4 || r.options.find(r.correct_answer) == r.options.end()) {
      continue;  // malformed records keep their labels; review flags them
    }
    if (target == r.correct_answer) continue;
    std::swap(r.options[target], r.options[r.correct_answer]);
    r.correct_answer = target;
  }
  return kept;
}

SplitManifest split_by_video(const std::vector<QARecord>& records,
                             const std::array<double, 3>& ratios, std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("split_by_video: ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split_by_video: ratios must sum to 1");
  }
  std::set<std::string> videos;
  for (const auto& r : records) videos.insert(r.video_id);
  std::size_t positive_splits = 0;
  for (double r : ratios) positive_splits += r > 0.0 ? 1 : 0;
  if (videos.size() < positive_splits) {
    throw std::invalid_argument("split_by_video: fewer videos than splits");
  }

  SplitManifest manifest;
  for (const auto& v : videos) {
    double u = unit_from_hash(mix_seed(seed, "split/" + v));
    if (u < ratios[0]) {
      manifest.train.push_back(v);
    } else if (u < ratios[0] + ratios[1]) {
      manifest.val.push_back(v);
    } else {
      manifest.test.push_back(v);
    }
  }
  return manifest;
}

DatasetStats dataset_stats(const std::vector<QARecord>& records) {
  DatasetStats stats;
  stats.record_count = records.size();
  std::vector<double> lengths;
  for (const auto& r : records) {
    lengths.push_back(r.time_spans.total_length());
    if (r.time_spans.size() > 1) stats.multi_span_fraction += 1.0;
    stats.per_video_counts[r.video_id]++;
    stats.label_histogram[r.correct_answer]++;
  }
  if (records.empty()) return stats;
  stats.multi_span_fraction /= static_cast<double>(records.size());

  std::sort(lengths.begin(), lengths.end());
  auto percentile = [&](double p) {
    // nearest-rank on the sorted lengths
    double rank = p * static_cast<double>(lengths.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
    double frac = rank - static_cast<double>(lo);
    return lengths[lo] * (1.0 - frac) + lengths[hi] * frac;
  };
  double sum = 0.0;
  for (double l : lengths) sum += l;
  stats.span_length_mean = sum / static_cast<double>(lengths.size());
  stats.span_length_median = percentile(0.5);
  stats.span_length_p25 = percentile(0.25);
  stats.span_length_p75 = percentile(0.75);
  stats.span_length_min = lengths.front();
  stats.span_length_max = lengths.back();
  return stats;
}

nlohmann::ordered_json record_to_json(const QARecord& record) {
  nlohmann::ordered_json j;
  j["video_id"] = record.video_id;
  j["event_id"] = record.event_id;
  nlohmann::ordered_json spans = nlohmann::ordered_json::array();
  for (const auto& s : record.time_spans.spans()) {
    spans.push_back({round_two_decimals(s.start_s), round_two_decimals(s.end_s)});
  }
  j["time_spans"] = spans;
  j["event_description"] = record.event_description;
  j["grounding_query"] = record.grounding_query;
  j["question"] = record.question;
  nlohmann::ordered_json opts;
  for (const auto& [letter, text] : record.options) {
    opts[std::string(1, letter)] = text;
  }
  j["options"] = opts;
  j["correct_answer"] = std::string(1, record.correct_answer);
  if (record.stage1_reason) j["stage1_reason"] = *record.stage1_reason;
  if (record.stage2_reason) j["stage2_reason"] = *record.stage2_reason;
  return j;
}

ParsedRecord record_from_json(const nlohmann::json& j) {
  ParsedRecord out;
  QARecord& r = out.record;
  auto note = [&](const std::string& msg) { out.schema_errors.push_back(msg); };

  r.video_id = j.value("video_id", "");
  r.event_id = j.value("event_id", "");
  if (j.contains("time_spans")) {
    try {
      std::vector<Span> spans;
      for (const auto& pair : j["time_spans"]) {
        spans.push_back(Span{pair.at(0).get<double>(), pair.at(1).get<double>()});
      }
      r.time_spans = SpanSet::from_sorted(std::move(spans));
    } catch (const std::exception& e) {
      note(std::string("time_spans malformed: ") + e.what());
    }
  } else {
    note("time_spans missing");
  }
  r.event_description = j.value("event_description", "");
  r.grounding_query = j.value("grounding_query", "");
  r.question = j.value("question", "");
  if (j.contains("options") && j["options"].is_object()) {
    for (const auto& [key, value] : j["options"].items()) {
      if (key.size() == 1 && key[0] >= 'A' && key[0] <= 'D' && value.is_string()) {
        r.options[key[0]] = value.get<std::string>();
      } else {
        note("options contain a bad key or value: " + key);
      }
    }
  } else {
    note("options missing");
  }
  std::string correct = j.value("correct_answer", "");
  if (correct.size() == 1) {
    r.correct_answer = correct[0];
  } else {
    note("correct_answer missing or not a single letter");
  }
  if (j.contains("stage1_reason") && j["stage1_reason"].is_string()) {
    r.stage1_reason = j["stage1_reason"].get<std::string>();
  }
  if (j.contains("stage2_reason") && j["stage2_reason"].is_string()) {
    r.stage2_reason = j["stage2_reason"].get<std::string>();
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const std::vector<QARecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<ParsedRecord> read_dataset_lenient(const std::filesystem::path& path) {
  std::vector<ParsedRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      ParsedRecord broken;
      broken.schema_errors.push_back(path.string() + ":" + std::to_string(line_no) +
                                     ": unparsable JSON: " + e.what());
      out.push_back(std::move(broken));
      continue;
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

std::vector<QARecord> read_dataset(const std::filesystem::path& path) {
  std::vector<QARecord> records;
  for (auto& parsed : read_dataset_lenient(path)) {
    if (!parsed.schema_errors.empty()) {
      throw std::runtime_error(path.string() + ": bad record " +
                               (parsed.record.item_id().empty() ? "?" : parsed.record.item_id()) +
                               ": " + parsed.schema_errors.front());
    }
    records.push_back(std::move(parsed.record));
  }
  return records;
}

void write_split_manifest(const std::filesystem::path& path, const SplitManifest& manifest) {
  nlohmann::ordered_json j;
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  j["train"] = sorted(manifest.train);
  j["val"] = sorted(manifest.val);
  j["test"] = sorted(manifest.test);
  write_text_file(path, j.dump(2) + "\n");
}

SplitManifest read_split_manifest(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  SplitManifest m;
  m.train = j.value("train", std::vector<std::string>{});
  m.val = j.value("val", std::vector<std::string>{});
  m.test = j.value("test", std::vector<std::string>{});
  return m;
}

nlohmann::ordered_json stats_to_json(const DatasetStats& stats) {
  nlohmann::ordered_json j;
  j["record_count"] = stats.record_count;
  nlohmann::ordered_json span;
  span["mean"] = stats.span_length_mean;
  span["median"] = stats.span_length_median;
  span["p25"] = stats.span_length_p25;
  span["p75"] = stats.span_length_p75;
  span["min"] = stats.span_length_min;
  span["max"] = stats.span_length_max;
  j["span_length_s"] = span;
  j["multi_span_fraction"] = stats.multi_span_fraction;
  nlohmann::ordered_json per_video;
  for (const auto& [video, count] : stats.per_video_counts) per_video[video] = count;
  j["per_video_counts"] = per_video;
  nlohmann::ordered_json labels;
  for (const auto& [letter, count] : stats.label_histogram) {
    labels[std::string(1, letter)] = count;
  }
  j["label_histogram"] = labels;
  return j;
}

}  // namespace skimzoom
