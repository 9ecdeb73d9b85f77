#include "skimzoom/inference.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "httplib.h"
#include "skimzoom/subprocess.hpp"
#include "skimzoom/util.hpp"

namespace skimzoom {

Preset preset_from_name(const std::string& name) {
  if (name == "A") return Preset::A;
  if (name == "B") return Preset::B;
  if (name == "C") return Preset::C;
  if (name == "D") return Preset::D;
  throw std::invalid_argument("unknown preset: " + name + " (expected A, B, C or D)");
}

const char* preset_name(Preset p) {
  switch (p) {
    case Preset::A: return "A";
    case Preset::B: return "B";
    case Preset::C: return "C";
    case Preset::D: return "D";
  }
  return "?";
}

namespace {

std::string stage_name(Stage s) { return s == Stage::Ground ? "ground" : "answer"; }

Stage stage_from_name(const std::string& s) {
  if (s == "ground") return Stage::Ground;
  if (s == "answer") return Stage::Answer;
  throw std::invalid_argument("unknown stage: " + s);
}

nlohmann::ordered_json spans_to_json(const SpanSet& spans) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : spans.spans()) {
    arr.push_back({round_two_decimals(s.start_s), round_two_decimals(s.end_s)});
  }
  return arr;
}

SpanSet spans_from_json(const nlohmann::json& arr) {
  std::vector<Span> spans;
  for (const auto& pair : arr) {
    spans.push_back(Span{pair.at(0).get<double>(), pair.at(1).get<double>()});
  }
  return SpanSet::from_sorted(std::move(spans));
}

// The lookup identity mock backends use: everything the wire carries that
// distinguishes one record from another.
std::string request_key(const std::string& question, const std::map<char, std::string>& options) {
  std::string key = question;
  for (const auto& [letter, text] : options) {
    key += '\x1f';
    key += letter;
    key += '=';
    key += text;
  }
  return key;
}

}  // namespace

nlohmann::ordered_json request_to_json(const BackendRequest& request) {
  nlohmann::ordered_json j;
  j["stage"] = stage_name(request.stage);
  j["video_id"] = request.video_id;
  j["prompt_text"] = request.prompt_text;
  auto frames = nlohmann::ordered_json::array();
  for (const auto& f : request.frames) {
    nlohmann::ordered_json fj;
    fj["index"] = f.source_index;
    fj["timestamp_s"] = round_two_decimals(f.timestamp_s);
    frames.push_back(std::move(fj));
  }
  j["frames"] = frames;
  j["question"] = request.question;
  nlohmann::ordered_json opts;
  for (const auto& [letter, text] : request.options) opts[std::string(1, letter)] = text;
  j["options"] = opts;
  if (request.stage == Stage::Ground) {
    j["grounding_query"] = request.grounding_query;
  } else {
    j["spans"] = spans_to_json(request.spans);
  }
  return j;
}

BackendRequest request_from_json(const nlohmann::json& j) {
  BackendRequest r;
  r.stage = stage_from_name(j.at("stage").get<std::string>());
  r.video_id = j.value("video_id", "");
  r.prompt_text = j.value("prompt_text", "");
  if (j.contains("frames")) {
    for (const auto& fj : j["frames"]) {
      r.frames.push_back(FrameSample{fj.at("index").get<long long>(),
                                     fj.at("timestamp_s").get<double>()});
    }
  }
  r.question = j.value("question", "");
  if (j.contains("options")) {
    for (const auto& [key, value] : j["options"].items()) {
      if (key.size() == 1) r.options[key[0]] = value.get<std::string>();
    }
  }
  r.grounding_query = j.value("grounding_query", "");
  if (j.contains("spans")) r.spans = spans_from_json(j["spans"]);
  return r;
}

nlohmann::ordered_json response_to_json(const BackendResponse& response) {
  nlohmann::ordered_json j;
  j["raw_text"] = response.raw_text;
  if (response.policy_logprob_sum) j["policy_logprob_sum"] = *response.policy_logprob_sum;
  if (response.ref_logprob_sum) j["ref_logprob_sum"] = *response.ref_logprob_sum;
  if (response.token_count > 0) j["token_count"] = response.token_count;
  return j;
}

BackendResponse response_from_json(const nlohmann::json& j) {
  BackendResponse r;
  r.raw_text = j.at("raw_text").get<std::string>();
  if (j.contains("policy_logprob_sum") && !j["policy_logprob_sum"].is_null()) {
    r.policy_logprob_sum = j["policy_logprob_sum"].get<double>();
  }
  if (j.contains("ref_logprob_sum") && !j["ref_logprob_sum"].is_null()) {
    r.ref_logprob_sum = j["ref_logprob_sum"].get<double>();
  }
  r.token_count = j.value("token_count", 0ll);
  return r;
}

// --- Mock backends -----------------------------------------------------------

namespace {

// Synthetic logprob bookkeeping so rollout plumbing has something real to
// chew on: deterministic in the response text.
void attach_mock_logprobs(BackendResponse* resp, std::uint64_t salt) {
  long long tokens = 0;
  bool in_word = false;
  for (char c : resp->raw_text) {
    bool word = !std::isspace(static_cast<unsigned char>(c));
    if (word && !in_word) ++tokens;
    in_word = word;
  }
  tokens = std::max(tokens, 1ll);
  double per_token = -0.5 - unit_from_hash(splitmix64(salt));
  resp->token_count = tokens;
  resp->policy_logprob_sum = per_token * static_cast<double>(tokens);
  resp->ref_logprob_sum = (per_token - 0.1) * static_cast<double>(tokens);
}

}  // namespace

GoldEchoBackend::GoldEchoBackend(const std::vector<QARecord>& records) {
  for (const auto& r : records) {
    by_key_[request_key(r.question, r.options)] = r;
  }
}

BackendResponse GoldEchoBackend::generate(const BackendRequest& request) {
  auto it = by_key_.find(request_key(request.question, request.options));
  if (it == by_key_.end()) {
    throw std::runtime_error("gold-echo backend has no record for this request");
  }
  const QARecord& gold = it->second;
  BackendResponse resp;
  if (request.stage == Stage::Ground) {
    resp.raw_text = render_response(gold.time_spans,
                                    gold.stage1_reason.value_or("These moments match the query."),
                                    std::nullopt);
  } else {
    SpanSet none;
    resp.raw_text = render_response(
        none, gold.stage2_reason.value_or("The frames support this option."),
        gold.correct_answer);
  }
  attach_mock_logprobs(&resp, fnv1a64(resp.raw_text));
  return resp;
}

RandomBackend::RandomBackend(std::uint64_t seed, int max_spans)
    : seed_(seed), max_spans_(std::max(1, max_spans)) {}

BackendResponse RandomBackend::generate(const BackendRequest& request) {
  // Key on the full request identity; repeat calls with the same envelope get
  // fresh (but reproducible) samples via the per-key counter.  The video id
  // keeps keys distinct across items even if two share question text, so the
  // counters stay deterministic under any thread schedule.
  std::string key = stage_name(request.stage) + "/" + request.video_id + "/" +
                    request_key(request.question, request.options);
  int repeat = 0;
  {
    std::lock_guard<std::mutex> lock(mu_);
    repeat = calls_per_key_[key]++;
  }
  std::mt19937_64 rng(mix_seed(mix_seed(seed_, key), static_cast<std::uint64_t>(repeat)));

  // Duration proxy: the latest frame timestamp in the prompt, or a default.
  double horizon = 60.0;
  if (!request.frames.empty()) horizon = request.frames.back().timestamp_s;
  horizon = std::max(horizon, 1.0);

  BackendResponse resp;
  if (request.stage == Stage::Ground) {
    int m = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_spans_));
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < m; ++i) {
      double a = round_two_decimals(unit_from_hash(rng()) * horizon);
      double b = round_two_decimals(unit_from_hash(rng()) * horizon);
      if (a > b) std::swap(a, b);
      if (a == b) b = round_two_decimals(std::min(horizon, b + 0.5));
      if (a < b) pairs.emplace_back(a, b);
    }
    std::string text;
    for (const auto& [a, b] : pairs) {
      if (!text.empty()) text += ' ';
      text += render_span(a, b);
    }
    resp.raw_text = text.empty() ? render_span(0.0, round_two_decimals(horizon)) : text;
    resp.raw_text += " A guess at the relevant moments.";
  } else {
    char letter = static_cast<char>('A' + rng() % 4);
    resp.raw_text = "Considering the frames provided. " + render_answer(letter);
  }
  attach_mock_logprobs(&resp, rng());
  return resp;
}

BackendResponse MalformedBackend::generate(const BackendRequest& request) {
  BackendResponse resp;
  if (request.stage == Stage::Ground) {
    resp.raw_text = "somewhere near the middle <span>[three,five]</span> or "
                    "maybe <span>[7.1</span> who can say";
  } else {
    resp.raw_text = "<answer>maybe B?</answer> <answer>E</answer> shrug";
  }
  attach_mock_logprobs(&resp, fnv1a64(resp.raw_text));
  return resp;
}

// --- Transports ---------------------------------------------------------------

HttpBackend::HttpBackend(const std::string& endpoint) {
  // Accept "http://host:port" with an optional path prefix.
  std::string rest = endpoint;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) != 0) {
    throw std::invalid_argument("http backend endpoint must start with http://");
  }
  rest = rest.substr(scheme.size());
  std::size_t slash = rest.find('/');
  if (slash != std::string::npos) {
    path_prefix_ = rest.substr(slash);
    if (path_prefix_ == "/") path_prefix_.clear();
    rest = rest.substr(0, slash);
  }
  std::size_t colon = rest.find(':');
  if (colon == std::string::npos) {
    host_ = rest;
    port_ = 80;
  } else {
    host_ = rest.substr(0, colon);
    port_ = std::stoi(rest.substr(colon + 1));
  }
}

BackendResponse HttpBackend::generate(const BackendRequest& request) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(60, 0);
  auto result = client.Post(path_prefix_ + "/generate", request_to_json(request).dump(),
                            "application/json");
  if (!result) {
    throw TransportError("http backend unreachable: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw TransportError("http backend returned status " + std::to_string(result->status));
  }
  try {
    return response_from_json(nlohmann::json::parse(result->body));
  } catch (const std::exception& e) {
    throw TransportError(std::string("http backend sent an unparsable body: ") + e.what());
  }
}

PipeBackend::PipeBackend(const std::string& command)
    : child_(std::make_unique<Subprocess>(command)) {}

PipeBackend::~PipeBackend() = default;

BackendResponse PipeBackend::generate(const BackendRequest& request) {
  std::string reply;
  try {
    std::lock_guard<std::mutex> lock(mu_);
    reply = child_->round_trip(request_to_json(request).dump());
  } catch (const std::exception& e) {
    throw TransportError(std::string("pipe backend failed: ") + e.what());
  }
  try {
    return response_from_json(nlohmann::json::parse(reply));
  } catch (const std::exception& e) {
    throw TransportError(std::string("pipe backend sent an unparsable line: ") + e.what());
  }
}

// --- Prompt assembly -----------------------------------------------------------

namespace {

std::string render_plain_placeholders(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += "<image>";
  }
  return out;
}

std::string options_block(const std::map<char, std::string>& options) {
  std::string out;
  for (const auto& [letter, text] : options) {
    out += letter;
    out += ") ";
    out += text;
    out += '\n';
  }
  return out;
}

std::string ground_prompt(const std::string& frames_text, const QARecord& record) {
  return frames_text +
         "\nGrounding query: " + record.grounding_query +
         "\nFind every moment needed to answer the question and reply with one or more "
         "<span>[start,end]</span> tags, absolute seconds with two decimals, followed by a "
         "brief reason.";
}

std::string zoom_prompt(const std::string& frames_text, const QARecord& record) {
  return frames_text + "\nQuestion: " + record.question + "\n" + options_block(record.options) +
         "These frames were selected from the moments under consideration. Reply with a brief "
         "reason and exactly one <answer>X</answer> tag.";
}

std::string single_pass_prompt(const std::string& frames_text, const QARecord& record) {
  return frames_text + "\nQuestion: " + record.question + "\n" + options_block(record.options) +
         "Watch the video and reply with a brief reason and exactly one <answer>X</answer> tag.";
}

BackendResponse call_with_retries(Backend& backend, const BackendRequest& request,
                                  const PipelineOptions& options, bool* transport_failed) {
  *transport_failed = false;
  int attempts = options.max_retries + 1;
  int delay_ms = options.backoff_ms;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      return backend.generate(request);
    } catch (const TransportError&) {
      if (attempt + 1 >= attempts) break;
      if (delay_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        delay_ms *= 2;
      }
    }
  }
  *transport_failed = true;
  return BackendResponse{};
}

}  // namespace

StageOutcome run_stage1(const FrameSource& source, const QARecord& record, Backend& backend,
                        const PipelineOptions& options) {
  options.budget.validate();
  SampleResult sampled = sample_global(source, options.budget.n_g);

  BackendRequest request;
  request.stage = Stage::Ground;
  request.video_id = source.video_id;
  request.frames = sampled.frames;
  request.question = record.question;
  request.options = record.options;
  request.grounding_query = record.grounding_query;
  request.prompt_text = ground_prompt(serialize_frames(sampled.frames), record);
  if (options.request_observer) options.request_observer(request);

  StageOutcome outcome;
  outcome.frames_used = static_cast<int>(sampled.frames.size());
  outcome.shortfall = sampled.shortfall;
  outcome.backend_response = call_with_retries(backend, request, options,
                                               &outcome.transport_failed);
  if (outcome.transport_failed) return outcome;

  outcome.parsed = parse_response(outcome.backend_response.raw_text);

  // Keep the first k_spans in emission order, clip into the video, then
  // canonicalize (sort + merge).
  auto emitted = outcome.parsed.parsed_spans();
  if (emitted.size() > static_cast<std::size_t>(options.budget.k_spans)) {
    emitted.resize(static_cast<std::size_t>(options.budget.k_spans));
  }
  std::vector<std::pair<double, double>> clipped;
  for (auto [a, b] : emitted) {
    a = std::max(0.0, std::min(a, source.duration_s));
    b = std::max(0.0, std::min(b, source.duration_s));
    clipped.emplace_back(a, b);
  }
  outcome.spans = normalize_spans(clipped, source.duration_s).spans;
  return outcome;
}

StageOutcome run_stage2(const FrameSource& source, const SpanSet& spans, const QARecord& record,
                        Backend& backend, const PipelineOptions& options) {
  options.budget.validate();
  if (spans.empty()) throw std::invalid_argument("run_stage2: span set is empty");

  StageOutcome outcome;
  SampleResult sampled;
  if (options.budget.n_l > 0) {
    sampled = sample_spans(source, spans, options.budget.n_l, options.budget.cap_factor);
  }

  BackendRequest request;
  request.stage = Stage::Answer;
  request.video_id = source.video_id;
  request.frames = sampled.frames;
  request.question = record.question;
  request.options = record.options;
  request.spans = spans;
  request.prompt_text = zoom_prompt(serialize_frames(sampled.frames), record);
  if (options.request_observer) options.request_observer(request);

  outcome.frames_used = static_cast<int>(sampled.frames.size());
  outcome.shortfall = sampled.shortfall;
  outcome.backend_response = call_with_retries(backend, request, options,
                                               &outcome.transport_failed);
  if (outcome.transport_failed) return outcome;

  outcome.parsed = parse_response(outcome.backend_response.raw_text);
  outcome.answer = outcome.parsed.answer;
  return outcome;
}

namespace {

// Presets A-C: one answer-stage request over the whole timeline with the
// full n_g + n_l budget.  A drops timestamps, B keeps them, C keeps them and
// uses the zoom wording.
PipelineResult run_single_pass(const FrameSource& source, const QARecord& record,
                               Backend& backend, const PipelineOptions& options) {
  PipelineResult result;
  result.item_id = record.item_id();

  int total = options.budget.n_g + options.budget.n_l;
  SampleResult sampled = sample_global(source, total);

  BackendRequest request;
  request.stage = Stage::Answer;
  request.video_id = source.video_id;
  request.frames = sampled.frames;
  request.question = record.question;
  request.options = record.options;
  request.spans = SpanSet::from_sorted({Span{0.0, source.duration_s}});
  std::string frames_text = options.preset == Preset::A
                                ? render_plain_placeholders(sampled.frames.size())
                                : serialize_frames(sampled.frames);
  request.prompt_text = options.preset == Preset::C ? zoom_prompt(frames_text, record)
                                                    : single_pass_prompt(frames_text, record);
  if (options.request_observer) options.request_observer(request);

  result.n_g_used = static_cast<int>(sampled.frames.size());
  result.shortfall = sampled.shortfall;

  bool failed = false;
  BackendResponse resp = call_with_retries(backend, request, options, &failed);
  if (failed) {
    result.failure = true;
    return result;
  }
  InterleavedResponse parsed = parse_response(resp.raw_text);
  result.stage2_raw = resp.raw_text;
  result.scored_text = resp.raw_text;
  result.answer = parsed.answer;
  result.pred_spans = normalize_spans(parsed.parsed_spans(), source.duration_s).spans;
  result.policy_logprob_sum = resp.policy_logprob_sum;
  result.ref_logprob_sum = resp.ref_logprob_sum;
  result.token_count = resp.token_count;

  RewardBreakdown breakdown =
      score_response(parsed, record.time_spans, record.correct_answer, source.duration_s,
                     options.budget.m_max, options.reward, options.gamma);
  result.reward = breakdown;
  return result;
}

}  // namespace

PipelineResult run_pipeline(const FrameSource& source, const QARecord& record, Backend& backend,
                            const PipelineOptions& options) {
  source.validate();
  options.budget.validate();
  if (record.time_spans.empty()) {
    throw std::invalid_argument("run_pipeline: record " + record.item_id() + " has no gold spans");
  }

  if (options.preset != Preset::D) return run_single_pass(source, record, backend, options);

  PipelineResult result;
  result.item_id = record.item_id();

  StageOutcome stage1 = run_stage1(source, record, backend, options);
  result.stage1_raw = stage1.backend_response.raw_text;
  result.n_g_used = stage1.frames_used;
  result.shortfall = stage1.shortfall;
  if (stage1.transport_failed) {
    result.failure = true;
    result.shortfall += options.budget.n_l;  // zoom frames never sampled
    return result;
  }
  result.pred_spans = stage1.spans;

  // Zoom input: predicted spans, gold spans under teacher forcing, or the
  // whole timeline when stage 1 came back empty.
  SpanSet zoom_spans = stage1.spans;
  if (options.teacher_force_ratio > 0.0) {
    double u = unit_from_hash(mix_seed(options.seed, "teacher-force/" + record.item_id()));
    if (u < options.teacher_force_ratio) zoom_spans = record.time_spans;
  }
  if (zoom_spans.empty()) {
    result.fallback = true;
    zoom_spans = SpanSet::from_sorted({Span{0.0, source.duration_s}});
  }

  StageOutcome stage2 = run_stage2(source, zoom_spans, record, backend, options);
  result.stage2_raw = stage2.backend_response.raw_text;
  result.n_l_used = stage2.frames_used;
  result.shortfall += stage2.shortfall;
  if (stage2.transport_failed) {
    result.failure = true;
    return result;
  }
  result.answer = stage2.answer;

  // Score the protocol's combined emission: predicted spans (canonical form)
  // plus the answer-stage output.
  std::string combined = render_spans(result.pred_spans);
  if (!combined.empty()) combined += ' ';
  combined += stage2.backend_response.raw_text;
  result.scored_text = combined;
  InterleavedResponse parsed = parse_response(combined);
  result.reward = score_response(parsed, record.time_spans, record.correct_answer,
                                 source.duration_s, options.budget.m_max, options.reward,
                                 options.gamma);
  if (stage1.backend_response.policy_logprob_sum && stage2.backend_response.policy_logprob_sum) {
    result.policy_logprob_sum =
        *stage1.backend_response.policy_logprob_sum + *stage2.backend_response.policy_logprob_sum;
  }
  if (stage1.backend_response.ref_logprob_sum && stage2.backend_response.ref_logprob_sum) {
    result.ref_logprob_sum =
        *stage1.backend_response.ref_logprob_sum + *stage2.backend_response.ref_logprob_sum;
  }
  result.token_count = stage1.backend_response.token_count + stage2.backend_response.token_count;
  return result;
}

std::vector<PipelineResult> run_pipeline_batch(
    const std::map<std::string, FrameSource>& sources_by_video,
    const std::vector<QARecord>& records, Backend& backend, const PipelineOptions& options,
    int jobs) {
  std::vector<PipelineResult> results(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    auto it = sources_by_video.find(records[i].video_id);
    if (it == sources_by_video.end()) {
      throw std::runtime_error("no frame manifest for video " + records[i].video_id);
    }
    results[i] = run_pipeline(it->second, records[i], backend, options);
  });
  return results;
}

void write_results(const std::filesystem::path& path,
                   const std::vector<PipelineResult>& results) {
  std::string out;
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["item_id"] = r.item_id;
    j["spans"] = spans_to_json(r.pred_spans);
    j["answer"] = r.answer ? nlohmann::ordered_json(std::string(1, *r.answer))
                           : nlohmann::ordered_json(nullptr);
    j["n_g_used"] = r.n_g_used;
    j["n_l_used"] = r.n_l_used;
    j["shortfall"] = r.shortfall;
    j["fallback"] = r.fallback;
    j["failure"] = r.failure;
    if (r.reward) {
      nlohmann::ordered_json rj;
      rj["tiou"] = r.reward->tiou;
      rj["fmt_time"] = r.reward->fmt_time;
      rj["fmt_ans"] = r.reward->fmt_ans;
      rj["correct"] = r.reward->correct;
      rj["r_loc"] = r.reward->r_loc;
      rj["r_ans"] = r.reward->r_ans;
      rj["r_total"] = r.reward->r_total;
      j["reward"] = rj;
    }
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace skimzoom
