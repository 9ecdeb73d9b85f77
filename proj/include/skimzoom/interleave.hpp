#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skimzoom/span.hpp"

namespace skimzoom {

// One sampled frame: index into the source manifest plus its absolute time.
struct FrameSample {
  long long source_index = 0;
  double timestamp_s = 0.0;
};

// Renders a frame list as interleaved placeholders with absolute timestamps:
// "<image> @ 2.00s <image> @ 4.00s".  Input must be temporally ordered
// (non-decreasing); throws std::invalid_argument otherwise.
std::string serialize_frames(const std::vector<FrameSample>& frames);

// One <span>[a,b]</span> occurrence as emitted, before any validation.
struct SpanCandidate {
  std::string payload;        // raw text between <span> and </span>
  double start_s = 0.0;
  double end_s = 0.0;
  bool parsed = false;        // payload matched "[number,number]"
  bool two_decimals = false;  // both numbers written with exactly two decimals
};

// Everything recoverable from a raw model response.  Parsing is total: any
// byte string yields a (possibly empty) response, never an exception.
struct InterleavedResponse {
  std::string raw_text;
  std::vector<SpanCandidate> span_candidates;  // emission order
  int answer_tag_count = 0;
  std::optional<char> answer;  // set iff exactly one well-formed answer tag
  std::string rationale_text;  // text outside span/answer tags, trimmed

  // (start, end) pairs of the candidates whose payload parsed.
  std::vector<std::pair<double, double>> parsed_spans() const;
};

InterleavedResponse parse_response(const std::string& raw);

// Timestamp-format score in {0, .2, .4, .6, .8, 1}: zero when no span tag
// parses at all (unparsable output earns the floor, not partial credit);
// otherwise the satisfied fraction of five predicates —
//   1. every span tag's payload parsed numerically,
//   2. every value written with exactly two decimals,
//   3. every parsed pair ordered (start < end),
//   4. every parsed value inside [0, duration_s],
//   5. span tag count <= m_max.
double fmt_time_score(const InterleavedResponse& response, double duration_s, int m_max);

// Answer-format score in {0, 1}: one iff exactly one well-formed
// <answer>X</answer> tag with X in {A,B,C,D}.
double fmt_ans_score(const InterleavedResponse& response);

struct FormatScores {
  double fmt_time = 0.0;
  double fmt_ans = 0.0;
};

FormatScores format_scores(const InterleavedResponse& response, double duration_s, int m_max);

// Canonical rendering (what a well-behaved responder emits, and what the
// round-trip property is stated over).
std::string render_span(double start_s, double end_s);      // "<span>[A.AA,B.BB]</span>"
std::string render_spans(const SpanSet& spans);              // space-joined tags
std::string render_answer(char option);                      // "<answer>X</answer>"

// spans tags + optional rationale + optional answer tag, single-space joined.
std::string render_response(const SpanSet& spans, const std::string& rationale,
                            std::optional<char> answer);

}  // namespace skimzoom
