#include "skimzoom/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "skimzoom/util.hpp"

namespace skimzoom {

void GrpoConfig::validate() const {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("grpo.eps must be positive");
  }
  if (kl_coef < 0.0) {
    throw std::invalid_argument("grpo.kl_coef must be non-negative");
  }
  if (group_size < 1) {
    throw std::invalid_argument("grpo.group_size must be at least 1");
  }
  if (!(teacher_force_ratio >= 0.0 && teacher_force_ratio <= 1.0)) {
    throw std::invalid_argument("grpo.teacher_force_ratio must lie in [0,1]");
  }
}

void DatasetConfig::validate() const {
  if (n_videos < 1) {
    throw std::invalid_argument("dataset.n_videos must be at least 1");
  }
  if (!(min_duration_s > 0.0) || !(max_duration_s >= min_duration_s)) {
    throw std::invalid_argument("dataset duration range is invalid");
  }
  if (!(fps > 0.0)) {
    throw std::invalid_argument("dataset.fps must be positive");
  }
  if (!(chunk_len_s > 0.0)) {
    throw std::invalid_argument("dataset.chunk_len_s must be positive");
  }
  if (min_events < 1 || max_events < min_events) {
    throw std::invalid_argument("dataset event count range is invalid");
  }
  if (!(recurrence_prob >= 0.0 && recurrence_prob <= 1.0)) {
    throw std::invalid_argument("dataset.recurrence_prob must lie in [0,1]");
  }
  for (double t : {merge_threshold, dup_threshold, link_threshold}) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::invalid_argument("dataset similarity thresholds must lie in [0,1]");
    }
  }
  if (train_ratio < 0.0 || val_ratio < 0.0 || test_ratio < 0.0) {
    throw std::invalid_argument("dataset split ratios must be non-negative");
  }
  const double total = train_ratio + val_ratio + test_ratio;
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("dataset split ratios must sum to 1");
  }
}

void BackendConfig::validate() const {
  if (kind != "gold" && kind != "random" && kind != "malformed" && kind != "http" &&
      kind != "pipe") {
    throw std::invalid_argument("backend.kind must be gold|random|malformed|http|pipe");
  }
  if (kind == "http" && endpoint.empty()) {
    throw std::invalid_argument("backend.endpoint is required for the http backend");
  }
  if (kind == "pipe" && command.empty()) {
    throw std::invalid_argument("backend.command is required for the pipe backend");
  }
  if (retries < 0) {
    throw std::invalid_argument("backend.retries must be non-negative");
  }
  if (backoff_ms < 0) {
    throw std::invalid_argument("backend.backoff_ms must be non-negative");
  }
}

void EvalConfig::validate() const {
  if (thresholds.empty()) {
    throw std::invalid_argument("eval.thresholds must list at least one threshold");
  }
  double prev = 0.0;
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) {
      throw std::invalid_argument("eval.thresholds entries must lie in (0,1)");
    }
    if (t <= prev && prev != 0.0) {
      throw std::invalid_argument("eval.thresholds must strictly increase");
    }
    prev = t;
  }
}

void RunConfig::validate() const {
  budget.validate();
  reward.validate();
  grpo.validate();
  dataset.validate();
  backend.validate();
  eval.validate();
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) {
    ++b;
  }
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) {
    --e;
  }
  return s.substr(b, e - b);
}

double parse_double(const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + value.size() || value.empty()) {
    throw std::runtime_error("expected a number, got \"" + value + "\"");
  }
  return v;
}

long long parse_int(const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (end != begin + value.size() || value.empty()) {
    throw std::runtime_error("expected an integer, got \"" + value + "\"");
  }
  return v;
}

std::uint64_t parse_uint64(const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end != begin + value.size() || value.empty() || value[0] == '-') {
    throw std::runtime_error("expected a non-negative integer, got \"" + value + "\"");
  }
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no" || value == "off") {
    return false;
  }
  throw std::runtime_error("expected a boolean, got \"" + value + "\"");
}

std::vector<double> parse_double_list(const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_double(trim(item)));
  }
  if (out.empty()) {
    throw std::runtime_error("expected a comma-separated number list");
  }
  return out;
}

// "0.3:0.5,0.5:0.75,0.7:1.0" -> threshold/bonus pairs.  The literal "none"
// clears the list (the shaped grounding bonus is off when the list is empty).
std::vector<ShapingThreshold> parse_shaping(const std::string& value) {
  std::vector<ShapingThreshold> out;
  if (value == "none") {
    return out;
  }
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw std::runtime_error("expected threshold:bonus pairs, got \"" + item + "\"");
    }
    out.push_back(ShapingThreshold{parse_double(trim(item.substr(0, colon))),
                                   parse_double(trim(item.substr(colon + 1)))});
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"budget.n_g", [](RunConfig& c, const std::string& v) { c.budget.n_g = static_cast<int>(parse_int(v)); }},
      {"budget.n_l", [](RunConfig& c, const std::string& v) { c.budget.n_l = static_cast<int>(parse_int(v)); }},
      {"budget.m_max", [](RunConfig& c, const std::string& v) { c.budget.m_max = static_cast<int>(parse_int(v)); }},
      {"budget.k_spans", [](RunConfig& c, const std::string& v) { c.budget.k_spans = static_cast<int>(parse_int(v)); }},
      {"budget.cap_factor", [](RunConfig& c, const std::string& v) { c.budget.cap_factor = parse_double(v); }},

      {"reward.alpha", [](RunConfig& c, const std::string& v) { c.reward.alpha = parse_double(v); }},
      {"reward.beta", [](RunConfig& c, const std::string& v) { c.reward.beta = parse_double(v); }},
      {"reward.gamma0", [](RunConfig& c, const std::string& v) { c.reward.gamma0 = parse_double(v); }},
      {"reward.gamma1", [](RunConfig& c, const std::string& v) { c.reward.gamma1 = parse_double(v); }},
      {"reward.ramp_steps", [](RunConfig& c, const std::string& v) { c.reward.ramp_steps = parse_int(v); }},
      {"reward.shaping", [](RunConfig& c, const std::string& v) { c.reward.shaping_thresholds = parse_shaping(v); }},
      {"reward.length_penalty_rate", [](RunConfig& c, const std::string& v) { c.reward.length_penalty_rate = parse_double(v); }},
      {"reward.length_penalty_cap_chars", [](RunConfig& c, const std::string& v) { c.reward.length_penalty_cap_chars = parse_int(v); }},

      {"grpo.eps", [](RunConfig& c, const std::string& v) { c.grpo.eps = parse_double(v); }},
      {"grpo.kl_coef", [](RunConfig& c, const std::string& v) { c.grpo.kl_coef = parse_double(v); }},
      {"grpo.group_size", [](RunConfig& c, const std::string& v) { c.grpo.group_size = static_cast<int>(parse_int(v)); }},
      {"grpo.normalize", [](RunConfig& c, const std::string& v) { c.grpo.normalize = parse_bool(v); }},
      {"grpo.teacher_force_ratio", [](RunConfig& c, const std::string& v) { c.grpo.teacher_force_ratio = parse_double(v); }},

      {"dataset.n_videos", [](RunConfig& c, const std::string& v) { c.dataset.n_videos = static_cast<int>(parse_int(v)); }},
      {"dataset.min_duration_s", [](RunConfig& c, const std::string& v) { c.dataset.min_duration_s = parse_double(v); }},
      {"dataset.max_duration_s", [](RunConfig& c, const std::string& v) { c.dataset.max_duration_s = parse_double(v); }},
      {"dataset.fps", [](RunConfig& c, const std::string& v) { c.dataset.fps = parse_double(v); }},
      {"dataset.chunk_len_s", [](RunConfig& c, const std::string& v) { c.dataset.chunk_len_s = parse_double(v); }},
      {"dataset.min_events", [](RunConfig& c, const std::string& v) { c.dataset.min_events = static_cast<int>(parse_int(v)); }},
      {"dataset.max_events", [](RunConfig& c, const std::string& v) { c.dataset.max_events = static_cast<int>(parse_int(v)); }},
      {"dataset.recurrence_prob", [](RunConfig& c, const std::string& v) { c.dataset.recurrence_prob = parse_double(v); }},
      {"dataset.merge_threshold", [](RunConfig& c, const std::string& v) { c.dataset.merge_threshold = parse_double(v); }},
      {"dataset.dup_threshold", [](RunConfig& c, const std::string& v) { c.dataset.dup_threshold = parse_double(v); }},
      {"dataset.link_threshold", [](RunConfig& c, const std::string& v) { c.dataset.link_threshold = parse_double(v); }},
      {"dataset.train_ratio", [](RunConfig& c, const std::string& v) { c.dataset.train_ratio = parse_double(v); }},
      {"dataset.val_ratio", [](RunConfig& c, const std::string& v) { c.dataset.val_ratio = parse_double(v); }},
      {"dataset.test_ratio", [](RunConfig& c, const std::string& v) { c.dataset.test_ratio = parse_double(v); }},

      {"backend.kind", [](RunConfig& c, const std::string& v) { c.backend.kind = v; }},
      {"backend.endpoint", [](RunConfig& c, const std::string& v) { c.backend.endpoint = v; }},
      {"backend.command", [](RunConfig& c, const std::string& v) { c.backend.command = v; }},
      {"backend.retries", [](RunConfig& c, const std::string& v) { c.backend.retries = static_cast<int>(parse_int(v)); }},
      {"backend.backoff_ms", [](RunConfig& c, const std::string& v) { c.backend.backoff_ms = static_cast<int>(parse_int(v)); }},

      {"eval.thresholds", [](RunConfig& c, const std::string& v) { c.eval.thresholds = parse_double_list(v); }},
      {"eval.single_best", [](RunConfig& c, const std::string& v) { c.eval.single_best = parse_bool(v); }},

      {"run.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_uint64(v); }},
  };
  return table;
}

void apply_key(RunConfig& config, const std::string& dotted, const std::string& value) {
  const auto it = setters().find(dotted);
  if (it == setters().end()) {
    throw std::runtime_error("unknown config key \"" + dotted + "\"");
  }
  it->second(config, value);
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::string section = "run";  // top-level keys live in the implicit [run]
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') {
      continue;
    }
    try {
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw std::runtime_error("unterminated section header");
        }
        section = trim(line.substr(1, line.size() - 2));
        if (section != "run" && section != "budget" && section != "reward" &&
            section != "grpo" && section != "dataset" && section != "backend" &&
            section != "eval") {
          throw std::runtime_error("unknown config section \"" + section + "\"");
        }
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        throw std::runtime_error("empty key");
      }
      apply_key(config, section + "." + key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path), path.string());
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::runtime_error("override must look like section.key=value, got \"" + assignment +
                             "\"");
  }
  std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key == "seed") {
    key = "run.seed";  // allow the common shorthand
  }
  apply_key(config, key, value);
}

}  // namespace skimzoom
