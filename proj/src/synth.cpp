#include "skimzoom/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <random>
#include <set>
#include <stdexcept>

#include "skimzoom/util.hpp"

namespace skimzoom {

namespace {

const char* kSubjects[] = {
    "a red fox",        "a delivery robot", "a street musician", "a tabby cat",
    "a tall cyclist",   "a young juggler",  "a park gardener",   "a golden retriever",
    "a skateboarder",   "a mail carrier",   "a window cleaner",  "a food vendor",
    "a night guard",    "a small drone",    "a violin student",  "a chess player",
};

const char* kActions[] = {
    "inspects", "chases",   "repairs", "circles",  "paints",  "stacks",
    "unloads",  "waters",   "sweeps",  "balances", "follows", "carries",
};

const char* kObjects[] = {
    "the wooden crate",  "the stone fountain", "the parked van",    "the market stall",
    "the garden bench",  "the traffic cone",   "the metal gate",    "the flower cart",
    "the ticket booth",  "the bronze statue",  "the bicycle rack",  "the glass door",
};

std::string make_caption(std::mt19937_64& rng, std::set<std::string>* used_pairs) {
  // Subject/object pairs stay unique within a video, so distinct events never
  // collapse into near-duplicate questions downstream.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const char* subj = kSubjects[rng() % std::size(kSubjects)];
    const char* act = kActions[rng() % std::size(kActions)];
    const char* obj = kObjects[rng() % std::size(kObjects)];
    std::string pair = std::string(subj) + "|" + obj;
    if (used_pairs->insert(pair).second) {
      return std::string(subj) + " " + act + " " + obj;
    }
  }
  throw std::runtime_error("make_caption: ran out of distinct subject/object pairs");
}

}  // namespace

std::string SynthVideo::chunk_caption(double start_s, double end_s) const {
  double mid = 0.5 * (start_s + end_s);
  for (const auto& event : events) {
    if (mid >= event.span.start_s && mid < event.span.end_s) return event.description;
  }
  return events.empty() ? std::string("nothing in particular") : events.back().description;
}

SynthVideo make_synth_video(const SynthConfig& config, std::uint64_t seed, int index) {
  if (config.n_videos < 1 || config.min_events < 4 || config.max_events < config.min_events) {
    throw std::invalid_argument("make_synth_video: bad synthetic corpus config");
  }
  if (!(config.duration_min_s > 0.0) || config.duration_max_s < config.duration_min_s) {
    throw std::invalid_argument("make_synth_video: bad duration range");
  }

  std::mt19937_64 rng(mix_seed(seed, "synth-video/" + std::to_string(index)));

  SynthVideo video;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "vid%04d", index);
  video.meta.video_id = buf;

  // Duration on the chunk grid, so event boundaries align with chunk edges.
  int min_chunks = static_cast<int>(std::ceil(config.duration_min_s / config.chunk_len_s));
  int max_chunks = static_cast<int>(std::floor(config.duration_max_s / config.chunk_len_s));
  if (max_chunks < min_chunks) max_chunks = min_chunks;
  int n_chunks = min_chunks + static_cast<int>(rng() % (max_chunks - min_chunks + 1));
  video.meta.duration_s = n_chunks * config.chunk_len_s;

  int n_events = config.min_events +
                 static_cast<int>(rng() % (config.max_events - config.min_events + 1));
  n_events = std::min(n_events, n_chunks);

  // Split the chunk count into n_events positive parts.
  std::vector<int> part(n_events, 1);
  for (int extra = n_chunks - n_events; extra > 0; --extra) {
    part[rng() % n_events]++;
  }

  std::set<std::string> used_pairs;
  std::vector<std::string> captions;
  int n_recur = 0;
  double cursor = 0.0;
  for (int e = 0; e < n_events; ++e) {
    PlannedEvent event;
    event.span.start_s = cursor;
    cursor += part[e] * config.chunk_len_s;
    event.span.end_s = std::min(cursor, video.meta.duration_s);

    // Maybe recur: reuse a caption from a non-adjacent earlier event, so the
    // chunk merge scan still splits them into separate graph nodes.  Keep at
    // least four distinct captions per video so every event has enough
    // in-video material for three distractor options.
    const bool roll = unit_from_hash(rng()) < config.recurrence_prob;
    bool recur = e >= 2 && n_events - (n_recur + 1) >= 4 && roll;
    if (recur) {
      std::size_t source = rng() % static_cast<std::size_t>(e - 1);  // excludes e-1
      if (captions[source] == captions[e - 1]) recur = false;  // never abut a recurrence
      if (recur) {
        event.description = captions[source];
        ++n_recur;
      }
    }
    if (!recur) event.description = make_caption(rng, &used_pairs);
    captions.push_back(event.description);
    video.events.push_back(std::move(event));
  }

  video.frames = FrameSource::uniform_grid(video.meta.video_id, video.meta.duration_s, config.fps);
  return video;
}

std::vector<SynthVideo> make_synth_corpus(const SynthConfig& config, std::uint64_t seed) {
  std::vector<SynthVideo> corpus;
  corpus.reserve(config.n_videos);
  for (int i = 0; i < config.n_videos; ++i) {
    corpus.push_back(make_synth_video(config, seed, i));
  }
  return corpus;
}

}  // namespace skimzoom
