#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace skimzoom {

// Closed interval of absolute video time in seconds.  start < end, finite.
struct Span {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }
};

struct VideoMeta {
  std::string video_id;
  double duration_s = 0.0;
};

// Sorted, pairwise disjoint list of spans.  The only ways to build a
// non-empty one are from_sorted() (validating) and normalize_spans(), so a
// SpanSet in hand always satisfies the ordering/disjointness invariant.
class SpanSet {
 public:
  SpanSet() = default;

  // Validates: every span well-formed (finite, start < end, start >= 0),
  // strictly ascending, non-overlapping (abutment counts as overlap here —
  // abutting spans must have been merged).  Throws std::invalid_argument.
  static SpanSet from_sorted(std::vector<Span> spans);

  const std::vector<Span>& spans() const { return spans_; }
  bool empty() const { return spans_.empty(); }
  std::size_t size() const { return spans_.size(); }

  // Sum of span lengths.
  double total_length() const;

  // True iff t lies inside one of the spans (closed intervals).
  bool contains(double t) const;

  bool operator==(const SpanSet& other) const {
    if (spans_.size() != other.spans_.size()) return false;
    for (std::size_t i = 0; i < spans_.size(); ++i) {
      if (spans_[i].start_s != other.spans_[i].start_s) return false;
      if (spans_[i].end_s != other.spans_[i].end_s) return false;
    }
    return true;
  }

 private:
  explicit SpanSet(std::vector<Span> spans) : spans_(std::move(spans)) {}
  std::vector<Span> spans_;
};

struct NormalizeResult {
  SpanSet spans;
  int dropped = 0;  // raw pairs rejected outright
  int merged = 0;   // raw pairs absorbed into a neighbour
};

// Canonicalizes raw (start, end) pairs against a video of length duration_s:
// pairs that are non-finite, reversed (start >= end), negative, or reaching
// past the end of the video are dropped; survivors are sorted and any two
// whose gap is <= gap_eps are merged (overlap is a negative gap, so overlaps
// always merge).  duration_s must be > 0 and gap_eps >= 0.
NormalizeResult normalize_spans(const std::vector<std::pair<double, double>>& raw,
                                double duration_s, double gap_eps = 0.0);

// Temporal IoU between two span sets: total intersection length over total
// union length.  Empty pred -> 0.  Empty gold -> std::invalid_argument.
double multi_span_tiou(const SpanSet& pred, const SpanSet& gold);

// Interval algebra over single spans.  The seven base relations; every pair
// of well-formed spans lands in exactly one (relation, inverted) cell, and
// relation(a,b) is relation(b,a) with the inverted flag flipped (Equals is
// its own inverse and never sets the flag).
enum class Relation { Before, Meets, Overlaps, Starts, During, Finishes, Equals };

struct IntervalRelation {
  Relation relation = Relation::Equals;
  bool inverted = false;

  bool operator==(const IntervalRelation& o) const {
    return relation == o.relation && inverted == o.inverted;
  }
};

IntervalRelation interval_relation(const Span& a, const Span& b);

const char* relation_name(Relation r);
Relation relation_from_name(const std::string& name);  // throws on unknown

// Recall@tau over a list of per-item IoUs, as a percentage in [0, 100].
// Threshold comparison is inclusive (iou >= tau counts).  Preconditions:
// non-empty list, every IoU in [0,1], tau in (0,1).
double recall_at_iou(const std::vector<double>& ious, double tau);

// Mean IoU as a percentage in [0, 100].  Non-empty list required.
double mean_iou(const std::vector<double>& ious);

}  // namespace skimzoom
