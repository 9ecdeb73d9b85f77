#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skimzoom/interleave.hpp"
#include "skimzoom/span.hpp"

namespace skimzoom {

// The decodable frames of one video: strictly increasing timestamps, all
// inside [0, duration_s].
struct FrameSource {
  std::string video_id;
  double duration_s = 0.0;
  std::vector<double> frame_timestamps;

  // Builds a regular grid at `fps` with frames at (i + 0.5) / fps, i.e. at
  // frame centers, which keeps endpoints unambiguous.
  static FrameSource uniform_grid(std::string video_id, double duration_s, double fps);

  // Manifest format: one line per frame, "index<TAB>timestamp_s".  The
  // duration comes from the video table, not the manifest.  Validates
  // ordering, range, and that indices count up from zero.
  static FrameSource from_manifest(const std::filesystem::path& path, std::string video_id,
                                   double duration_s);

  void write_manifest(const std::filesystem::path& path) const;

  void validate() const;  // throws std::invalid_argument on a broken source
};

// Fixed per-question budget: n_g skim frames + n_l zoom frames.
struct BudgetConfig {
  int n_g = 64;         // global (skim) frames
  int n_l = 64;         // local (zoom) frames
  int m_max = 5;        // most spans a response may emit before format penalty
  int k_spans = 5;      // spans kept from stage 1, in emission order
  double cap_factor = 1.5;  // per-span allocation cap multiplier

  void validate() const;
};

// What a sampling pass actually produced.  shortfall counts requested frames
// that could not be filled with distinct native frames; the budget is never
// silently exceeded or padded from outside the requested region.
struct SampleResult {
  std::vector<FrameSample> frames;  // temporally ordered, distinct indices
  int shortfall = 0;
};

// n frames at midpoint-uniform targets t_j = (j - 0.5) * duration / n,
// snapped to the nearest native frame; duplicate snaps collapse into
// shortfall.  Errors: n < 1 or a source with no frames.
SampleResult sample_global(const FrameSource& source, int n);

// n frames distributed across the span set proportionally to span length
// (largest-remainder rounding), each span's share capped at
// ceil(cap_factor * n * len_i / total_len) with surplus moved to spans still
// under their cap.  Within each span, midpoint-uniform targets snap to native
// frames *inside* that span only — output timestamps always lie in the span
// union.  Errors: n < 1, empty span set, empty source.
SampleResult sample_spans(const FrameSource& source, const SpanSet& spans, int n,
                          double cap_factor);

}  // namespace skimzoom
