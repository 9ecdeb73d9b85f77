#include "skimzoom/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "skimzoom/config.hpp"
#include "skimzoom/evalkit.hpp"
#include "skimzoom/event_graph.hpp"
#include "skimzoom/grpo.hpp"
#include "skimzoom/inference.hpp"
#include "skimzoom/qa_factory.hpp"
#include "skimzoom/synth.hpp"
#include "skimzoom/util.hpp"

namespace skimzoom {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Shared option plumbing

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonOpts* opts) {
  sub->add_option("--config", opts->config_path, "Run configuration file (INI)")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", opts->overrides,
                  "Override a config key, e.g. --set reward.alpha=0.2 (repeatable)");
  sub->add_option("--seed", opts->seed, "Root random seed (overrides run.seed)");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig config;
  if (!opts.config_path.empty()) {
    config = load_run_config(opts.config_path);
  }
  for (const std::string& assignment : opts.overrides) {
    apply_override(config, assignment);
  }
  if (opts.seed.has_value()) {
    config.seed = opts.seed;
  }
  config.validate();
  return config;
}

std::uint64_t require_seed(const RunConfig& config) {
  if (!config.seed.has_value()) {
    throw std::runtime_error(
        "this command generates data and needs a seed: pass --seed N or set run.seed");
  }
  return *config.seed;
}

// ---------------------------------------------------------------------------
// Small file helpers

void write_videos_file(const fs::path& path, const std::vector<SynthVideo>& corpus) {
  std::string out;
  for (const SynthVideo& video : corpus) {
    nlohmann::ordered_json j;
    j["video_id"] = video.meta.video_id;
    j["duration_s"] = video.meta.duration_s;
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

std::map<std::string, double> read_videos_file(const fs::path& path) {
  std::map<std::string, double> durations;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("video_id") ||
        !j.contains("duration_s")) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected {\"video_id\", \"duration_s\"}");
    }
    durations[j["video_id"].get<std::string>()] = j["duration_s"].get<double>();
  }
  if (durations.empty()) {
    throw std::runtime_error(path.string() + ": no videos listed");
  }
  return durations;
}

const char* gate_status_name(GateStatus s) {
  switch (s) {
    case GateStatus::Pass: return "pass";
    case GateStatus::Fail: return "fail";
    case GateStatus::Skipped: return "skipped";
  }
  return "skipped";
}

nlohmann::ordered_json gate_to_json(const GateVerdict& v) {
  nlohmann::ordered_json j;
  j["status"] = gate_status_name(v.status);
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

void write_review_report(const fs::path& path, const std::vector<ReviewReport>& reports) {
  std::string out;
  for (const ReviewReport& r : reports) {
    nlohmann::ordered_json j;
    j["item_id"] = r.item_id;
    j["accepted"] = r.accepted();
    nlohmann::ordered_json gates;
    gates["schema"] = gate_to_json(r.schema);
    gates["temporal_locality"] = gate_to_json(r.temporal_locality);
    gates["language"] = gate_to_json(r.language);
    gates["text_only"] = gate_to_json(r.text_only);
    gates["dedup"] = gate_to_json(r.dedup);
    j["gates"] = gates;
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

void write_entity_clusters(const fs::path& path, const std::vector<EntityCluster>& clusters) {
  std::string out;
  for (const EntityCluster& c : clusters) {
    nlohmann::ordered_json j;
    j["cluster_id"] = c.cluster_id;
    j["representative"] = c.representative;
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (const auto& [event_id, entity] : c.members) {
      nlohmann::ordered_json m;
      m["event_id"] = event_id;
      m["entity"] = entity;
      members.push_back(m);
    }
    j["members"] = members;
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// dataset build

SynthConfig synth_config_from(const DatasetConfig& d) {
  SynthConfig s;
  s.n_videos = d.n_videos;
  s.duration_min_s = d.min_duration_s;
  s.duration_max_s = d.max_duration_s;
  s.fps = d.fps;
  s.chunk_len_s = d.chunk_len_s;
  s.min_events = d.min_events;
  s.max_events = d.max_events;
  s.recurrence_prob = d.recurrence_prob;
  return s;
}

int cmd_dataset_build(const RunConfig& config, const std::string& out_dir) {
  const std::uint64_t seed = require_seed(config);
  const DatasetConfig& d = config.dataset;

  const fs::path root(out_dir);
  fs::create_directories(root / "manifests");
  fs::create_directories(root / "graphs");

  const std::vector<SynthVideo> corpus = make_synth_corpus(synth_config_from(d), seed);

  TokenF1Similarity similarity;
  FirstTextSummarizer summarizer;
  TemplateQaWriter writer;

  std::vector<QARecord> records;
  for (const SynthVideo& video : corpus) {
    // Tile, caption, and merge the timeline into the per-video event graph.
    std::vector<Chunk> chunks = chunk_timeline(video.meta.duration_s, d.chunk_len_s);
    for (Chunk& chunk : chunks) {
      chunk.description = video.chunk_caption(chunk.span.start_s, chunk.span.end_s);
    }
    EventGraph graph;
    graph.nodes = merge_chunks(chunks, similarity, d.merge_threshold, &summarizer);
    graph.edges = derive_edges(graph.nodes);
    write_graph(root / "graphs" / (video.meta.video_id + ".ndjson"), graph);
    write_entity_clusters(root / "graphs" / (video.meta.video_id + ".entities.ndjson"),
                          cluster_entities(graph.nodes, nullptr, d.link_threshold));
    video.frames.write_manifest(root / "manifests" / (video.meta.video_id + ".tsv"));

    // Recurring events fold into one multi-span node before QA conversion.
    std::vector<EventNode> grouped = group_recurrences(graph.nodes, similarity, d.merge_threshold);
    for (const EventNode& node : grouped) {
      records.push_back(build_record(node, grouped, video.meta.video_id, writer,
                                     mix_seed(seed, video.meta.video_id + "/" + node.event_id)));
    }
  }

  // Review gates, duplicate removal, answer balancing, and the video split.
  const std::vector<ReviewReport> reports =
      review_dataset(records, nullptr, nullptr, default_deictic_terms(), d.dup_threshold);
  std::vector<QARecord> kept;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (reports[i].accepted()) kept.push_back(records[i]);
  }
  const std::vector<QARecord> final_records = dedup_and_balance(kept, d.dup_threshold, seed);
  const SplitManifest splits =
      split_by_video(final_records, {d.train_ratio, d.val_ratio, d.test_ratio}, seed);

  write_dataset(root / "dataset.ndjson", final_records);
  write_videos_file(root / "videos.ndjson", corpus);
  write_review_report(root / "review.ndjson", reports);
  write_split_manifest(root / "splits.json", splits);
  write_text_file(root / "stats.json", stats_to_json(dataset_stats(final_records)).dump(2) + "\n");

  std::cout << "videos " << corpus.size() << "\n"
            << "candidates " << records.size() << "\n"
            << "accepted " << kept.size() << "\n"
            << "records " << final_records.size() << "\n"
            << "train/val/test " << splits.train.size() << "/" << splits.val.size() << "/"
            << splits.test.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// dataset review / split / stats

int cmd_dataset_review(const RunConfig& config, const std::string& dataset_path,
                       const std::string& out_path) {
  const std::vector<ParsedRecord> parsed = read_dataset_lenient(dataset_path);
  std::vector<QARecord> records;
  records.reserve(parsed.size());
  for (const ParsedRecord& p : parsed) {
    records.push_back(p.record);
  }
  const std::vector<ReviewReport> reports = review_dataset(
      records, nullptr, nullptr, default_deictic_terms(), config.dataset.dup_threshold);

  std::size_t accepted = 0;
  std::map<std::string, std::size_t> failures;
  for (const ReviewReport& r : reports) {
    if (r.accepted()) ++accepted;
    if (r.schema.status == GateStatus::Fail) ++failures["schema"];
    if (r.temporal_locality.status == GateStatus::Fail) ++failures["temporal_locality"];
    if (r.language.status == GateStatus::Fail) ++failures["language"];
    if (r.text_only.status == GateStatus::Fail) ++failures["text_only"];
    if (r.dedup.status == GateStatus::Fail) ++failures["dedup"];
  }
  std::cout << "records " << reports.size() << "\naccepted " << accepted << "\n";
  for (const auto& [gate, count] : failures) {
    std::cout << "failed." << gate << " " << count << "\n";
  }
  if (!out_path.empty()) {
    write_review_report(out_path, reports);
  }
  return 0;
}

int cmd_dataset_split(const RunConfig& config, const std::string& dataset_path,
                      const std::string& out_path) {
  const std::uint64_t seed = require_seed(config);
  const std::vector<QARecord> records = read_dataset(dataset_path);
  const DatasetConfig& d = config.dataset;
  const SplitManifest splits =
      split_by_video(records, {d.train_ratio, d.val_ratio, d.test_ratio}, seed);
  write_split_manifest(out_path, splits);
  std::cout << "train/val/test " << splits.train.size() << "/" << splits.val.size() << "/"
            << splits.test.size() << "\n";
  return 0;
}

int cmd_dataset_stats(const std::string& dataset_path, const std::string& out_path) {
  const DatasetStats stats = dataset_stats(read_dataset(dataset_path));
  const std::string text = stats_to_json(stats).dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// pipeline run

std::unique_ptr<Backend> make_backend(const BackendConfig& b,
                                      const std::vector<QARecord>& records,
                                      std::uint64_t seed) {
  if (b.kind == "gold") return std::make_unique<GoldEchoBackend>(records);
  if (b.kind == "random") return std::make_unique<RandomBackend>(seed, 3);
  if (b.kind == "malformed") return std::make_unique<MalformedBackend>();
  if (b.kind == "http") return std::make_unique<HttpBackend>(b.endpoint);
  if (b.kind == "pipe") return std::make_unique<PipeBackend>(b.command);
  throw std::runtime_error("unknown backend kind \"" + b.kind + "\"");
}

struct PipelineRunArgs {
  std::string preset = "D";
  std::string dataset_path;
  std::string videos_path;
  std::string manifests_dir;
  std::string out_path;
  std::string rollouts_out;
  std::string trace_path;
  std::string backend_kind;
  std::string endpoint;
  std::string command;
  int jobs = 1;
  int limit = 0;
  int group_size = 0;
  long long step = 0;
};

int cmd_pipeline_run(RunConfig config, const PipelineRunArgs& args) {
  if (!args.backend_kind.empty()) config.backend.kind = args.backend_kind;
  if (!args.endpoint.empty()) config.backend.endpoint = args.endpoint;
  if (!args.command.empty()) config.backend.command = args.command;
  config.backend.validate();

  const std::uint64_t seed = require_seed(config);
  const bool rollout_mode = !args.rollouts_out.empty();
  if (args.out_path.empty() && !rollout_mode) {
    throw std::runtime_error("pass --out for results, --rollouts-out for rollouts, or both");
  }
  if (rollout_mode && args.group_size < 1) {
    throw std::runtime_error("--rollouts-out needs --group-size >= 1");
  }
  if (args.jobs < 1) throw std::runtime_error("--jobs must be >= 1");

  std::vector<QARecord> records = read_dataset(args.dataset_path);
  if (args.limit > 0 && records.size() > static_cast<std::size_t>(args.limit)) {
    records.resize(static_cast<std::size_t>(args.limit));
  }

  const std::map<std::string, double> durations = read_videos_file(args.videos_path);
  std::map<std::string, FrameSource> sources;
  for (const QARecord& record : records) {
    if (sources.count(record.video_id) != 0) continue;
    const auto it = durations.find(record.video_id);
    if (it == durations.end()) {
      throw std::runtime_error("video " + record.video_id + " missing from " + args.videos_path);
    }
    sources[record.video_id] = FrameSource::from_manifest(
        fs::path(args.manifests_dir) / (record.video_id + ".tsv"), record.video_id, it->second);
  }

  std::unique_ptr<Backend> backend = make_backend(config.backend, records, seed);

  PipelineOptions options;
  options.budget = config.budget;
  options.reward = config.reward;
  options.gamma = gamma_schedule(args.step, config.reward);
  options.preset = preset_from_name(args.preset);
  options.max_retries = config.backend.retries;
  options.backoff_ms = config.backend.backoff_ms;
  options.seed = seed;

  // Optional request trace: lines arrive in scheduling order under --jobs>1.
  std::mutex trace_mu;
  std::string trace;
  if (!args.trace_path.empty()) {
    options.request_observer = [&](const BackendRequest& request) {
      std::string line = request_to_json(request).dump();
      std::lock_guard<std::mutex> lock(trace_mu);
      trace += line;
      trace += '\n';
    };
  }

  if (!args.out_path.empty()) {
    const std::vector<PipelineResult> results =
        run_pipeline_batch(sources, records, *backend, options, args.jobs);
    write_results(args.out_path, results);
    std::size_t failures = 0;
    std::size_t fallbacks = 0;
    double reward_sum = 0.0;
    std::size_t rewarded = 0;
    for (const PipelineResult& r : results) {
      failures += r.failure ? 1 : 0;
      fallbacks += r.fallback ? 1 : 0;
      if (r.reward) {
        reward_sum += r.reward->r_total;
        ++rewarded;
      }
    }
    std::cout << "items " << results.size() << "\nfailures " << failures << "\nfallbacks "
              << fallbacks << "\n";
    if (rewarded > 0) {
      std::printf("mean_reward %.4f\n", reward_sum / static_cast<double>(rewarded));
    }
  }

  if (rollout_mode) {
    // Group sampling: every item gets group_size independent passes; teacher
    // forcing (zooming on gold spans for a seeded fraction of rollouts) only
    // applies here, never to plain evaluation runs.
    std::vector<RolloutGroup> groups(records.size());
    parallel_for(records.size(), args.jobs, [&](std::size_t i) {
      const QARecord& record = records[i];
      const auto src = sources.find(record.video_id);
      RolloutGroup group;
      group.prompt_id = record.item_id();
      for (int g = 0; g < args.group_size; ++g) {
        PipelineOptions opts = options;
        opts.seed = mix_seed(seed, "rollout/" + std::to_string(g));
        opts.teacher_force_ratio = config.grpo.teacher_force_ratio;
        const PipelineResult result = run_pipeline(src->second, record, *backend, opts);
        if (result.failure || !result.reward.has_value()) continue;
        Rollout rollout;
        rollout.response_text = result.scored_text;
        rollout.reward = *result.reward;
        rollout.policy_logprob_sum = result.policy_logprob_sum;
        rollout.ref_logprob_sum = result.ref_logprob_sum;
        rollout.token_count = result.token_count;
        group.rollouts.push_back(std::move(rollout));
      }
      groups[i] = std::move(group);
    });
    std::vector<RolloutGroup> non_empty;
    for (RolloutGroup& group : groups) {
      if (!group.rollouts.empty()) non_empty.push_back(std::move(group));
    }
    write_rollout_groups(args.rollouts_out, non_empty);
    std::cout << "groups " << non_empty.size() << "\ngroup_size " << args.group_size << "\n";
  }

  if (!args.trace_path.empty()) {
    write_text_file(args.trace_path, trace);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// reward score

int cmd_reward_score(const RunConfig& config, const std::string& responses_path,
                     const std::string& dataset_path, const std::string& videos_path,
                     const std::string& out_path, long long step) {
  const std::vector<QARecord> records = read_dataset(dataset_path);
  std::map<std::string, const QARecord*> by_id;
  for (const QARecord& record : records) {
    by_id[record.item_id()] = &record;
  }
  const std::map<std::string, double> durations = read_videos_file(videos_path);
  const double gamma = gamma_schedule(step, config.reward);

  std::string out;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(responses_path)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("item_id") ||
        !j.contains("response")) {
      throw std::runtime_error(responses_path + ":" + std::to_string(line_no) +
                               ": expected {\"item_id\", \"response\"}");
    }
    const std::string item_id = j["item_id"].get<std::string>();
    const auto rec = by_id.find(item_id);
    if (rec == by_id.end()) {
      throw std::runtime_error("response for unknown item id: " + item_id);
    }
    const auto dur = durations.find(rec->second->video_id);
    if (dur == durations.end()) {
      throw std::runtime_error("video " + rec->second->video_id + " missing from " + videos_path);
    }
    const InterleavedResponse parsed = parse_response(j["response"].get<std::string>());
    const RewardBreakdown b =
        score_response(parsed, rec->second->time_spans, rec->second->correct_answer, dur->second,
                       config.budget.m_max, config.reward, gamma);
    nlohmann::ordered_json row;
    row["item_id"] = item_id;
    row["tiou"] = b.tiou;
    row["fmt_time"] = b.fmt_time;
    row["fmt_ans"] = b.fmt_ans;
    row["correct"] = b.correct;
    row["r_loc"] = b.r_loc;
    row["r_ans"] = b.r_ans;
    row["r_total"] = b.r_total;
    out += row.dump();
    out += '\n';
  }
  if (out_path.empty()) {
    std::cout << out;
  } else {
    write_text_file(out_path, out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// grpo advantages / objective

int cmd_grpo_advantages(const RunConfig& config, const std::string& rollouts_path,
                        const std::string& out_path, bool normalize_flag) {
  std::vector<RolloutGroup> groups = read_rollout_groups(rollouts_path);
  const bool normalize = normalize_flag || config.grpo.normalize;
  if (normalize) {
    // Batch-level normalization first, then the per-group mean subtraction.
    std::vector<double> all;
    for (const RolloutGroup& group : groups) {
      for (const Rollout& r : group.rollouts) {
        all.push_back(r.reward.r_total);
      }
    }
    const std::vector<double> normed = batch_normalize(all, config.grpo.eps);
    std::size_t k = 0;
    for (RolloutGroup& group : groups) {
      std::vector<double> rewards;
      rewards.reserve(group.rollouts.size());
      for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        rewards.push_back(normed[k++]);
      }
      group.advantages = group_advantages(rewards);
    }
  } else {
    for (RolloutGroup& group : groups) {
      compute_group_advantages(group);
    }
  }
  write_rollout_groups(out_path, groups);
  std::size_t n = 0;
  for (const RolloutGroup& g : groups) n += g.rollouts.size();
  std::cout << "groups " << groups.size() << "\nrollouts " << n << "\n";
  return 0;
}

int cmd_grpo_objective(const RunConfig& config, const std::string& rollouts_path,
                       std::optional<double> kl_coef_flag) {
  const std::vector<RolloutGroup> groups = read_rollout_groups(rollouts_path);
  const double kl_coef = kl_coef_flag.value_or(config.grpo.kl_coef);
  const double value = grpo_objective(groups, kl_coef);
  std::printf("objective %.6f\n", value);
  return 0;
}

// ---------------------------------------------------------------------------
// eval grounding / qa

int cmd_eval_grounding(const RunConfig& config, const std::string& pred_path,
                       const std::string& gold_path, const std::string& out_path,
                       bool single_best_flag) {
  const EvalReport report =
      eval_grounding_files(pred_path, gold_path, config.eval.thresholds,
                           single_best_flag || config.eval.single_best);
  std::cout << format_report(report);
  if (!out_path.empty()) {
    write_text_file(out_path, report_to_ndjson(report));
  }
  return 0;
}

int cmd_eval_qa(const std::string& pred_path, const std::string& gold_path,
                const std::string& tasks_path, const std::string& out_path) {
  std::optional<fs::path> tasks;
  if (!tasks_path.empty()) tasks = fs::path(tasks_path);
  const EvalReport report = eval_qa_files(pred_path, gold_path, tasks);
  std::cout << format_report(report);
  if (!out_path.empty()) {
    write_text_file(out_path, report_to_ndjson(report));
  }
  return 0;
}

}  // namespace

int run_command(std::vector<std::string> args) {
  CLI::App app{
      "Span-grounded video question answering: a skim stage proposes the moments that "
      "matter, a zoom stage answers from frames inside them.  Includes the dataset "
      "factory, reward/advantage machinery, and the evaluation harness."};
  app.name("skimzoom");
  app.require_subcommand(1);

  int exit_code = 0;

  // --- dataset ---------------------------------------------------------------
  CLI::App* dataset = app.add_subcommand("dataset", "Build, review, split, and inspect datasets");
  dataset->require_subcommand(1);

  CLI::App* build = dataset->add_subcommand(
      "build", "Generate a synthetic corpus, derive event graphs, and write the QA dataset");
  auto build_common = std::make_shared<CommonOpts>();
  auto build_out = std::make_shared<std::string>();
  add_common(build, build_common.get());
  build->add_option("--out", *build_out, "Output directory")->required();
  build->callback([build_common, build_out, &exit_code] {
    exit_code = cmd_dataset_build(resolve_config(*build_common), *build_out);
  });

  CLI::App* review = dataset->add_subcommand("review", "Run the review gates over a dataset");
  auto review_common = std::make_shared<CommonOpts>();
  auto review_dataset_path = std::make_shared<std::string>();
  auto review_out = std::make_shared<std::string>();
  add_common(review, review_common.get());
  review->add_option("--dataset", *review_dataset_path, "Dataset NDJSON")->required();
  review->add_option("--out", *review_out, "Write the per-record report here (NDJSON)");
  review->callback([review_common, review_dataset_path, review_out, &exit_code] {
    exit_code =
        cmd_dataset_review(resolve_config(*review_common), *review_dataset_path, *review_out);
  });

  CLI::App* split = dataset->add_subcommand("split", "Assign whole videos to train/val/test");
  auto split_common = std::make_shared<CommonOpts>();
  auto split_dataset_path = std::make_shared<std::string>();
  auto split_out = std::make_shared<std::string>();
  add_common(split, split_common.get());
  split->add_option("--dataset", *split_dataset_path, "Dataset NDJSON")->required();
  split->add_option("--out", *split_out, "Split manifest output (JSON)")->required();
  split->callback([split_common, split_dataset_path, split_out, &exit_code] {
    exit_code = cmd_dataset_split(resolve_config(*split_common), *split_dataset_path, *split_out);
  });

  CLI::App* stats = dataset->add_subcommand("stats", "Summarize a dataset");
  auto stats_dataset_path = std::make_shared<std::string>();
  auto stats_out = std::make_shared<std::string>();
  stats->add_option("--dataset", *stats_dataset_path, "Dataset NDJSON")->required();
  stats->add_option("--out", *stats_out, "Write stats here instead of stdout (JSON)");
  stats->callback([stats_dataset_path, stats_out, &exit_code] {
    exit_code = cmd_dataset_stats(*stats_dataset_path, *stats_out);
  });

  // --- pipeline ---------------------------------------------------------------
  CLI::App* pipeline = app.add_subcommand("pipeline", "Run the question-answering protocol");
  pipeline->require_subcommand(1);

  CLI::App* run = pipeline->add_subcommand("run", "Answer every dataset item under a preset");
  auto run_common = std::make_shared<CommonOpts>();
  auto run_args = std::make_shared<PipelineRunArgs>();
  add_common(run, run_common.get());
  run->add_option("--preset", run_args->preset,
                  "A: one pass, no timestamps; B: one pass with timestamps; C: zoom wording "
                  "on the whole video; D: skim then zoom (default)")
      ->check(CLI::IsMember({"A", "B", "C", "D"}));
  run->add_option("--dataset", run_args->dataset_path, "Dataset NDJSON")->required();
  run->add_option("--videos", run_args->videos_path, "Video table NDJSON")->required();
  run->add_option("--manifests", run_args->manifests_dir, "Frame manifest directory")->required();
  run->add_option("--out", run_args->out_path, "Results NDJSON (doubles as predictions)");
  run->add_option("--rollouts-out", run_args->rollouts_out,
                  "Also sample rollout groups and write them here (NDJSON)");
  run->add_option("--group-size", run_args->group_size, "Rollouts per item for --rollouts-out");
  run->add_option("--backend", run_args->backend_kind, "gold|random|malformed|http|pipe")
      ->check(CLI::IsMember({"gold", "random", "malformed", "http", "pipe"}));
  run->add_option("--endpoint", run_args->endpoint, "HTTP backend base URL")
      ->envname("SKIMZOOM_ENDPOINT");
  run->add_option("--command", run_args->command, "Pipe backend child command");
  run->add_option("--jobs", run_args->jobs, "Concurrent items");
  run->add_option("--limit", run_args->limit, "Only run the first N items");
  run->add_option("--step", run_args->step, "Training step for the reward weight ramp");
  run->add_option("--trace-requests", run_args->trace_path,
                  "Write every backend request envelope here (NDJSON)");
  run->callback([run_common, run_args, &exit_code] {
    exit_code = cmd_pipeline_run(resolve_config(*run_common), *run_args);
  });

  // --- reward ---------------------------------------------------------------
  CLI::App* reward = app.add_subcommand("reward", "Score raw response text against gold");
  reward->require_subcommand(1);

  CLI::App* score = reward->add_subcommand("score", "Score {item_id, response} lines");
  auto score_common = std::make_shared<CommonOpts>();
  auto score_responses = std::make_shared<std::string>();
  auto score_dataset = std::make_shared<std::string>();
  auto score_videos = std::make_shared<std::string>();
  auto score_out = std::make_shared<std::string>();
  auto score_step = std::make_shared<long long>(0);
  add_common(score, score_common.get());
  score->add_option("--responses", *score_responses, "Responses NDJSON")->required();
  score->add_option("--dataset", *score_dataset, "Dataset NDJSON")->required();
  score->add_option("--videos", *score_videos, "Video table NDJSON")->required();
  score->add_option("--out", *score_out, "Breakdown output NDJSON (default stdout)");
  score->add_option("--step", *score_step, "Training step for the reward weight ramp");
  score->callback([score_common, score_responses, score_dataset, score_videos, score_out,
                   score_step, &exit_code] {
    exit_code = cmd_reward_score(resolve_config(*score_common), *score_responses, *score_dataset,
                                 *score_videos, *score_out, *score_step);
  });

  // --- grpo -----------------------------------------------------------------
  CLI::App* grpo = app.add_subcommand("grpo", "Group-relative advantage machinery");
  grpo->require_subcommand(1);

  CLI::App* adv = grpo->add_subcommand("advantages", "Fill per-rollout advantages");
  auto adv_common = std::make_shared<CommonOpts>();
  auto adv_rollouts = std::make_shared<std::string>();
  auto adv_out = std::make_shared<std::string>();
  auto adv_normalize = std::make_shared<bool>(false);
  add_common(adv, adv_common.get());
  adv->add_option("--rollouts", *adv_rollouts, "Rollout NDJSON")->required();
  adv->add_option("--out", *adv_out, "Rollouts with advantages (NDJSON)")->required();
  adv->add_flag("--normalize", *adv_normalize, "Batch-normalize rewards first");
  adv->callback([adv_common, adv_rollouts, adv_out, adv_normalize, &exit_code] {
    exit_code = cmd_grpo_advantages(resolve_config(*adv_common), *adv_rollouts, *adv_out,
                                    *adv_normalize);
  });

  CLI::App* obj = grpo->add_subcommand("objective", "Evaluate the surrogate objective");
  auto obj_common = std::make_shared<CommonOpts>();
  auto obj_rollouts = std::make_shared<std::string>();
  auto obj_kl = std::make_shared<std::optional<double>>();
  add_common(obj, obj_common.get());
  obj->add_option("--rollouts", *obj_rollouts, "Rollout NDJSON (advantages filled or not)")
      ->required();
  obj->add_option("--kl-coef", *obj_kl, "KL penalty weight (default grpo.kl_coef)");
  obj->callback([obj_common, obj_rollouts, obj_kl, &exit_code] {
    exit_code = cmd_grpo_objective(resolve_config(*obj_common), *obj_rollouts, *obj_kl);
  });

  // --- eval -----------------------------------------------------------------
  CLI::App* eval = app.add_subcommand("eval", "Grounding and answer metrics");
  eval->require_subcommand(1);

  CLI::App* eg = eval->add_subcommand("grounding", "Recall@tIoU and mIoU");
  auto eg_common = std::make_shared<CommonOpts>();
  auto eg_pred = std::make_shared<std::string>();
  auto eg_gold = std::make_shared<std::string>();
  auto eg_out = std::make_shared<std::string>();
  auto eg_single = std::make_shared<bool>(false);
  add_common(eg, eg_common.get());
  eg->add_option("--pred", *eg_pred, "Predictions NDJSON")->required();
  eg->add_option("--gold", *eg_gold, "Gold dataset NDJSON")->required();
  eg->add_option("--out", *eg_out, "Metrics output NDJSON");
  eg->add_flag("--single-best", *eg_single,
               "Score each item by its best single predicted span");
  eg->callback([eg_common, eg_pred, eg_gold, eg_out, eg_single, &exit_code] {
    exit_code =
        cmd_eval_grounding(resolve_config(*eg_common), *eg_pred, *eg_gold, *eg_out, *eg_single);
  });

  CLI::App* eq = eval->add_subcommand("qa", "Answer accuracy");
  auto eq_pred = std::make_shared<std::string>();
  auto eq_gold = std::make_shared<std::string>();
  auto eq_tasks = std::make_shared<std::string>();
  auto eq_out = std::make_shared<std::string>();
  eq->add_option("--pred", *eq_pred, "Predictions NDJSON")->required();
  eq->add_option("--gold", *eq_gold, "Gold dataset NDJSON")->required();
  eq->add_option("--tasks", *eq_tasks, "Optional {item_id, task} NDJSON for per-task accuracy");
  eq->add_option("--out", *eq_out, "Metrics output NDJSON");
  eq->callback([eq_pred, eq_gold, eq_tasks, eq_out, &exit_code] {
    exit_code = cmd_eval_qa(*eq_pred, *eq_gold, *eq_tasks, *eq_out);
  });

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends: print and succeed
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage message
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}

}  // namespace skimzoom
