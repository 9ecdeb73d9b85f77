#include "skimzoom/span.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace skimzoom {

namespace {
bool well_formed(const Span& s) {
  return std::isfinite(s.start_s) && std::isfinite(s.end_s) && s.start_s >= 0.0 &&
         s.start_s < s.end_s;
}
}  // namespace

SpanSet SpanSet::from_sorted(std::vector<Span> spans) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!well_formed(spans[i])) {
      throw std::invalid_argument("span " + std::to_string(i) + " is not well-formed");
    }
    if (i > 0 && spans[i].start_s <= spans[i - 1].end_s) {
      throw std::invalid_argument("spans must be sorted and disjoint at index " +
                                  std::to_string(i));
    }
  }
  return SpanSet(std::move(spans));
}

double SpanSet::total_length() const {
  double total = 0.0;
  for (const auto& s : spans_) total += s.length();
  return total;
}

bool SpanSet::contains(double t) const {
  for (const auto& s : spans_) {
    if (t >= s.start_s && t <= s.end_s) return true;
  }
  return false;
}

NormalizeResult normalize_spans(const std::vector<std::pair<double, double>>& raw,
                                double duration_s, double gap_eps) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw std::invalid_argument("normalize_spans: duration_s must be positive and finite");
  }
  if (!(gap_eps >= 0.0) || !std::isfinite(gap_eps)) {
    throw std::invalid_argument("normalize_spans: gap_eps must be >= 0");
  }

  NormalizeResult out;
  std::vector<Span> kept;
  kept.reserve(raw.size());
  for (const auto& [a, b] : raw) {
    if (!std::isfinite(a) || !std::isfinite(b) || a >= b || a < 0.0 || b > duration_s) {
      out.dropped++;
      continue;
    }
    kept.push_back(Span{a, b});
  }
  std::sort(kept.begin(), kept.end(), [](const Span& x, const Span& y) {
    return x.start_s != y.start_s ? x.start_s < y.start_s : x.end_s < y.end_s;
  });

  std::vector<Span> merged;
  for (const auto& s : kept) {
    if (!merged.empty() && s.start_s - merged.back().end_s <= gap_eps) {
      merged.back().end_s = std::max(merged.back().end_s, s.end_s);
      out.merged++;
    } else {
      merged.push_back(s);
    }
  }
  out.spans = SpanSet::from_sorted(std::move(merged));
  return out;
}

double multi_span_tiou(const SpanSet& pred, const SpanSet& gold) {
  if (gold.empty()) throw std::invalid_argument("multi_span_tiou: gold span set is empty");
  if (pred.empty()) return 0.0;

  double intersection = 0.0;
  const auto& p = pred.spans();
  const auto& g = gold.spans();
  std::size_t i = 0, j = 0;
  while (i < p.size() && j < g.size()) {
    double lo = std::max(p[i].start_s, g[j].start_s);
    double hi = std::min(p[i].end_s, g[j].end_s);
    if (hi > lo) intersection += hi - lo;
    // advance whichever interval ends first
    if (p[i].end_s < g[j].end_s) {
      ++i;
    } else {
      ++j;
    }
  }
  double uni = pred.total_length() + gold.total_length() - intersection;
  if (uni <= 0.0) return 0.0;
  return intersection / uni;
}

IntervalRelation interval_relation(const Span& a, const Span& b) {
  if (!well_formed(a) || !well_formed(b)) {
    throw std::invalid_argument("interval_relation: spans must be well-formed");
  }
  if (a.start_s == b.start_s && a.end_s == b.end_s) return {Relation::Equals, false};
  if (a.end_s < b.start_s) return {Relation::Before, false};
  if (b.end_s < a.start_s) return {Relation::Before, true};
  if (a.end_s == b.start_s) return {Relation::Meets, false};
  if (b.end_s == a.start_s) return {Relation::Meets, true};
  if (a.start_s == b.start_s) {
    return a.end_s < b.end_s ? IntervalRelation{Relation::Starts, false}
                             : IntervalRelation{Relation::Starts, true};
  }
  if (a.end_s == b.end_s) {
    return a.start_s > b.start_s ? IntervalRelation{Relation::Finishes, false}
                                 : IntervalRelation{Relation::Finishes, true};
  }
  if (a.start_s > b.start_s && a.end_s < b.end_s) return {Relation::During, false};
  if (b.start_s > a.start_s && b.end_s < a.end_s) return {Relation::During, true};
  return a.start_s < b.start_s ? IntervalRelation{Relation::Overlaps, false}
                               : IntervalRelation{Relation::Overlaps, true};
}

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::Before: return "before";
    case Relation::Meets: return "meets";
    case Relation::Overlaps: return "overlaps";
    case Relation::Starts: return "starts";
    case Relation::During: return "during";
    case Relation::Finishes: return "finishes";
    case Relation::Equals: return "equals";
  }
  return "unknown";
}

Relation relation_from_name(const std::string& name) {
  for (Relation r : {Relation::Before, Relation::Meets, Relation::Overlaps, Relation::Starts,
                     Relation::During, Relation::Finishes, Relation::Equals}) {
    if (name == relation_name(r)) return r;
  }
  throw std::invalid_argument("unknown interval relation: " + name);
}

namespace {
void check_iou_list(const std::vector<double>& ious) {
  if (ious.empty()) throw std::invalid_argument("IoU list is empty");
  for (double v : ious) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("IoU outside [0,1]");
  }
}
}  // namespace

double recall_at_iou(const std::vector<double>& ious, double tau) {
  check_iou_list(ious);
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("recall threshold must be in (0,1)");
  std::size_t hits = 0;
  for (double v : ious) {
    if (v >= tau) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ious.size());
}

double mean_iou(const std::vector<double>& ious) {
  check_iou_list(ious);
  double sum = 0.0;
  for (double v : ious) sum += v;
  return 100.0 * sum / static_cast<double>(ious.size());
}

}  // namespace skimzoom
