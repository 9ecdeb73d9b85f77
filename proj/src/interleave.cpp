#include "skimzoom/interleave.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "skimzoom/util.hpp"

namespace skimzoom {

namespace {

constexpr const char* kSpanOpen = "<span>";
constexpr const char* kSpanClose = "</span>";
constexpr const char* kAnswerOpen = "<answer>";
constexpr const char* kAnswerClose = "</answer>";

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Exactly "-?digits.dd": the canonical two-decimal rendering.
bool is_two_decimal_token(const std::string& tok) {
  std::size_t i = 0;
  if (i < tok.size() && tok[i] == '-') ++i;
  std::size_t digits = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) {
    ++i;
    ++digits;
  }
  if (digits == 0 || i >= tok.size() || tok[i] != '.') return false;
  ++i;
  return tok.size() - i == 2 && std::isdigit(static_cast<unsigned char>(tok[i])) &&
         std::isdigit(static_cast<unsigned char>(tok[i + 1]));
}

bool parse_number(const std::string& tok, double* out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) return false;
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}

// Fills the candidate from a payload like " [ 3.50 , 9.25 ] ".
void parse_span_payload(SpanCandidate* cand) {
  std::string body = trim(cand->payload);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') return;
  body = body.substr(1, body.size() - 2);
  std::size_t comma = body.find(',');
  if (comma == std::string::npos) return;
  if (body.find(',', comma + 1) != std::string::npos) return;
  std::string a = trim(body.substr(0, comma));
  std::string b = trim(body.substr(comma + 1));
  double va = 0.0, vb = 0.0;
  if (!parse_number(a, &va) || !parse_number(b, &vb)) return;
  cand->start_s = va;
  cand->end_s = vb;
  cand->parsed = true;
  cand->two_decimals = is_two_decimal_token(a) && is_two_decimal_token(b);
}

}  // namespace

std::string serialize_frames(const std::vector<FrameSample>& frames) {
  std::string out;
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].timestamp_s < prev) {
      throw std::invalid_argument("serialize_frames: frames must be temporally ordered");
    }
    prev = frames[i].timestamp_s;
    if (i > 0) out += ' ';
    out += "<image> @ ";
    out += format_seconds(frames[i].timestamp_s);
    out += 's';
  }
  return out;
}

std::vector<std::pair<double, double>> InterleavedResponse::parsed_spans() const {
  std::vector<std::pair<double, double>> out;
  for (const auto& c : span_candidates) {
    if (c.parsed) out.emplace_back(c.start_s, c.end_s);
  }
  return out;
}

InterleavedResponse parse_response(const std::string& raw) {
  InterleavedResponse resp;
  resp.raw_text = raw;

  // Scan left to right for span and answer tag regions; everything outside
  // them accumulates as rationale text.
  std::string rationale;
  std::size_t pos = 0;
  int valid_answers = 0;
  char answer_letter = '\0';
  while (pos < raw.size()) {
    std::size_t span_at = raw.find(kSpanOpen, pos);
    std::size_t ans_at = raw.find(kAnswerOpen, pos);
    std::size_t tag_at = std::min(span_at, ans_at);
    if (tag_at == std::string::npos) {
      rationale += raw.substr(pos);
      break;
    }
    bool is_span = span_at == tag_at;
    const char* close = is_span ? kSpanClose : kAnswerClose;
    std::size_t open_len = is_span ? 6 : 8;
    std::size_t close_at = raw.find(close, tag_at + open_len);
    if (close_at == std::string::npos) {
      // Unclosed tag: not a tag region, keep as plain text.
      rationale += raw.substr(pos);
      break;
    }
    rationale += raw.substr(pos, tag_at - pos);
    std::string payload = raw.substr(tag_at + open_len, close_at - (tag_at + open_len));
    if (is_span) {
      SpanCandidate cand;
      cand.payload = payload;
      parse_span_payload(&cand);
      resp.span_candidates.push_back(std::move(cand));
    } else {
      resp.answer_tag_count++;
      std::string letter = trim(payload);
      if (letter.size() == 1 && letter[0] >= 'A' && letter[0] <= 'D') {
        ++valid_answers;
        answer_letter = letter[0];
      }
    }
    pos = close_at + std::string(close).size();
  }
  if (resp.answer_tag_count == 1 && valid_answers == 1) resp.answer = answer_letter;
  resp.rationale_text = trim(rationale);
  return resp;
}

double fmt_time_score(const InterleavedResponse& response, double duration_s, int m_max) {
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("fmt_time_score: duration_s must be positive");
  }
  if (m_max < 1) throw std::invalid_argument("fmt_time_score: m_max must be >= 1");

  const auto& cands = response.span_candidates;
  std::size_t parsed = 0;
  for (const auto& c : cands) {
    if (c.parsed) ++parsed;
  }
  if (parsed == 0) return 0.0;  // nothing parses: floor, no partial credit

  bool all_parsed = parsed == cands.size();
  bool all_two_decimals = all_parsed;
  bool all_ordered = true;
  bool all_in_range = true;
  for (const auto& c : cands) {
    if (!c.parsed) continue;
    if (!c.two_decimals) all_two_decimals = false;
    if (!(c.start_s < c.end_s)) all_ordered = false;
    if (c.start_s < 0.0 || c.start_s > duration_s || c.end_s < 0.0 || c.end_s > duration_s) {
      all_in_range = false;
    }
  }
  bool count_ok = cands.size() <= static_cast<std::size_t>(m_max);

  int satisfied = static_cast<int>(all_parsed) + static_cast<int>(all_two_decimals) +
                  static_cast<int>(all_ordered) + static_cast<int>(all_in_range) +
                  static_cast<int>(count_ok);
  return static_cast<double>(satisfied) / 5.0;
}

double fmt_ans_score(const InterleavedResponse& response) {
  return response.answer.has_value() ? 1.0 : 0.0;
}

FormatScores format_scores(const InterleavedResponse& response, double duration_s, int m_max) {
  return FormatScores{fmt_time_score(response, duration_s, m_max), fmt_ans_score(response)};
}

std::string render_span(double start_s, double end_s) {
  std::string out = kSpanOpen;
  out += '[';
  out += format_seconds(start_s);
  out += ',';
  out += format_seconds(end_s);
  out += ']';
  out += kSpanClose;
  return out;
}

std::string render_spans(const SpanSet& spans) {
  std::string out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i > 0) out += ' ';
    out += render_span(spans.spans()[i].start_s, spans.spans()[i].end_s);
  }
  return out;
}

std::string render_answer(char option) {
  if (option < 'A' || option > 'D') {
    throw std::invalid_argument("render_answer: option must be one of A..D");
  }
  std::string out = kAnswerOpen;
  out += option;
  out += kAnswerClose;
  return out;
}

std::string render_response(const SpanSet& spans, const std::string& rationale,
                            std::optional<char> answer) {
  std::string out = render_spans(spans);
  if (!rationale.empty()) {
    if (!out.empty()) out += ' ';
    out += rationale;
  }
  if (answer) {
    if (!out.empty()) out += ' ';
    out += render_answer(*answer);
  }
  return out;
}

}  // namespace skimzoom
