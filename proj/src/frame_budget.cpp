#include "skimzoom/frame_budget.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "skimzoom/util.hpp"

namespace skimzoom {

FrameSource FrameSource::uniform_grid(std::string video_id, double duration_s, double fps) {
  if (!(duration_s > 0.0) || !(fps > 0.0)) {
    throw std::invalid_argument("uniform_grid: duration and fps must be positive");
  }
  FrameSource src;
  src.video_id = std::move(video_id);
  src.duration_s = duration_s;
  long long count = static_cast<long long>(std::floor(duration_s * fps));
  for (long long i = 0; i < count; ++i) {
    double t = (static_cast<double>(i) + 0.5) / fps;
    if (t > duration_s) break;
    src.frame_timestamps.push_back(t);
  }
  src.validate();
  return src;
}

FrameSource FrameSource::from_manifest(const std::filesystem::path& path, std::string video_id,
                                       double duration_s) {
  FrameSource src;
  src.video_id = std::move(video_id);
  src.duration_s = duration_s;
  long long expected_index = 0;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("manifest line missing tab separator: " + line);
    }
    long long index = 0;
    try {
      index = std::stoll(line.substr(0, tab));
    } catch (const std::exception&) {
      throw std::invalid_argument("manifest line has a non-numeric index: " + line);
    }
    if (index != expected_index) {
      throw std::invalid_argument("manifest indices must count up from 0, got " +
                                  std::to_string(index));
    }
    ++expected_index;
    char* end = nullptr;
    std::string ts = line.substr(tab + 1);
    double t = std::strtod(ts.c_str(), &end);
    if (end != ts.c_str() + ts.size()) {
      throw std::invalid_argument("manifest line has a non-numeric timestamp: " + line);
    }
    src.frame_timestamps.push_back(t);
  }
  src.validate();
  return src;
}

void FrameSource::write_manifest(const std::filesystem::path& path) const {
  validate();
  std::string out;
  for (std::size_t i = 0; i < frame_timestamps.size(); ++i) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%zu\t%.6f\n", i, frame_timestamps[i]);
    out += buf;
  }
  write_text_file(path, out);
}

void FrameSource::validate() const {
  if (video_id.empty()) throw std::invalid_argument("frame source needs a video id");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw std::invalid_argument("frame source duration must be positive");
  }
  double prev = -1.0;
  for (double t : frame_timestamps) {
    if (!std::isfinite(t) || t < 0.0 || t > duration_s) {
      throw std::invalid_argument("frame timestamp outside [0, duration]");
    }
    if (t <= prev) throw std::invalid_argument("frame timestamps must strictly increase");
    prev = t;
  }
}

void BudgetConfig::validate() const {
  if (n_g < 1) throw std::invalid_argument("budget: n_g must be >= 1");
  if (n_l < 0) throw std::invalid_argument("budget: n_l must be >= 0");
  if (m_max < 1) throw std::invalid_argument("budget: m_max must be >= 1");
  if (k_spans < 1) throw std::invalid_argument("budget: k_spans must be >= 1");
  if (!(cap_factor > 0.0)) throw std::invalid_argument("budget: cap_factor must be > 0");
}

namespace {

// Index of the native frame nearest to t, restricted to [lo_idx, hi_idx].
// Ties snap to the earlier frame.
long long nearest_frame(const std::vector<double>& ts, long long lo_idx, long long hi_idx,
                        double t) {
  auto begin = ts.begin() + lo_idx;
  auto end = ts.begin() + hi_idx + 1;
  auto it = std::lower_bound(begin, end, t);
  if (it == end) return hi_idx;
  if (it == begin) return lo_idx;
  double above = *it - t;
  double below = t - *(it - 1);
  if (below <= above) return static_cast<long long>(it - ts.begin()) - 1;
  return static_cast<long long>(it - ts.begin());
}

// Midpoint targets over [start, start+len) snapped to native frames whose
// index lies within [lo_idx, hi_idx].  Appends distinct picks in order.
void snap_midpoints(const FrameSource& source, double start, double len, int count,
                    long long lo_idx, long long hi_idx, std::set<long long>* chosen,
                    std::vector<long long>* out) {
  for (int j = 1; j <= count; ++j) {
    double target = start + (static_cast<double>(j) - 0.5) * len / count;
    long long idx = nearest_frame(source.frame_timestamps, lo_idx, hi_idx, target);
    if (chosen->insert(idx).second) out->push_back(idx);
  }
}

SampleResult result_from_indices(const FrameSource& source, std::vector<long long> indices,
                                 int requested) {
  std::sort(indices.begin(), indices.end());
  SampleResult res;
  for (long long idx : indices) {
    res.frames.push_back(FrameSample{idx, source.frame_timestamps[idx]});
  }
  res.shortfall = requested - static_cast<int>(indices.size());
  return res;
}

}  // namespace

SampleResult sample_global(const FrameSource& source, int n) {
  source.validate();
  if (n < 1) throw std::invalid_argument("sample_global: n must be >= 1");
  if (source.frame_timestamps.empty()) {
    throw std::invalid_argument("sample_global: source has no frames");
  }
  std::set<long long> chosen;
  std::vector<long long> picks;
  snap_midpoints(source, 0.0, source.duration_s, n, 0,
                 static_cast<long long>(source.frame_timestamps.size()) - 1, &chosen, &picks);
  return result_from_indices(source, std::move(picks), n);
}

SampleResult sample_spans(const FrameSource& source, const SpanSet& spans, int n,
                          double cap_factor) {
  source.validate();
  if (n < 1) throw std::invalid_argument("sample_spans: n must be >= 1");
  if (spans.empty()) throw std::invalid_argument("sample_spans: span set is empty");
  if (!(cap_factor > 0.0)) throw std::invalid_argument("sample_spans: cap_factor must be > 0");
  if (source.frame_timestamps.empty()) {
    throw std::invalid_argument("sample_spans: source has no frames");
  }

  const std::size_t k = spans.size();
  const double total_len = spans.total_length();

  // Largest-remainder proportional allocation.
  std::vector<double> quota(k);
  std::vector<int> alloc(k);
  std::vector<int> cap(k);
  int assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    quota[i] = n * spans.spans()[i].length() / total_len;
    alloc[i] = static_cast<int>(std::floor(quota[i]));
    cap[i] = static_cast<int>(std::ceil(cap_factor * quota[i]));
    assigned += alloc[i];
  }
  {
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double ra = quota[a] - std::floor(quota[a]);
      double rb = quota[b] - std::floor(quota[b]);
      if (ra != rb) return ra > rb;
      return a < b;
    });
    for (std::size_t pos = 0; assigned < n && pos < order.size(); ++pos) {
      alloc[order[pos]]++;
      ++assigned;
    }
  }

  // Enforce per-span caps; hand surplus to the span furthest below its quota
  // that still has cap room.  If everything is capped the surplus is lost
  // and shows up as shortfall rather than an exceeded cap.
  int surplus = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (alloc[i] > cap[i]) {
      surplus += alloc[i] - cap[i];
      alloc[i] = cap[i];
    }
  }
  while (surplus > 0) {
    std::size_t best = k;
    double best_deficit = -1.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (alloc[i] >= cap[i]) continue;
      double deficit = quota[i] - alloc[i];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = i;
      }
    }
    if (best == k) break;
    alloc[best]++;
    --surplus;
  }

  // Snap within each span.
  const auto& ts = source.frame_timestamps;
  std::set<long long> chosen;
  std::vector<long long> picks;
  for (std::size_t i = 0; i < k; ++i) {
    if (alloc[i] == 0) continue;
    const Span& s = spans.spans()[i];
    auto lo_it = std::lower_bound(ts.begin(), ts.end(), s.start_s);
    auto hi_it = std::upper_bound(ts.begin(), ts.end(), s.end_s);
    if (lo_it >= hi_it) continue;  // no native frames inside this span
    long long lo_idx = lo_it - ts.begin();
    long long hi_idx = (hi_it - ts.begin()) - 1;
    snap_midpoints(source, s.start_s, s.length(), alloc[i], lo_idx, hi_idx, &chosen, &picks);
  }
  return result_from_indices(source, std::move(picks), n);
}

}  // namespace skimzoom
