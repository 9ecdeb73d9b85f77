#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skimzoom/frame_budget.hpp"
#include "skimzoom/span.hpp"

namespace skimzoom {

// Deterministic synthetic corpus: each video is a frame grid plus a planned
// sequence of captioned segments.  Chunk captions are read off the plan, so
// the chunk->merge->graph pipeline can be exercised end to end with a known
// ground truth and no model anywhere.
struct SynthConfig {
  int n_videos = 20;
  double duration_min_s = 120.0;
  double duration_max_s = 300.0;
  double fps = 4.0;
  double chunk_len_s = 3.0;
  int min_events = 4;   // >= 4 so every event has 3 distractor sources
  int max_events = 8;
  double recurrence_prob = 0.25;  // chance an event re-uses an earlier caption
};

struct PlannedEvent {
  Span span;                // aligned to chunk boundaries
  std::string description;  // identical for recurrences of the same event
};

struct SynthVideo {
  VideoMeta meta;
  FrameSource frames;
  std::vector<PlannedEvent> events;  // in temporal order

  // Caption for the chunk starting at start_s: the planned caption of the
  // event that contains the chunk's midpoint.
  std::string chunk_caption(double start_s, double end_s) const;
};

// Video index -> fully planned video.  Same (config, seed, index) always
// yields the same video, regardless of generation order.
SynthVideo make_synth_video(const SynthConfig& config, std::uint64_t seed, int index);

std::vector<SynthVideo> make_synth_corpus(const SynthConfig& config, std::uint64_t seed);

}  // namespace skimzoom
