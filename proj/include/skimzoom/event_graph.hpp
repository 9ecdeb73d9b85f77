#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "skimzoom/span.hpp"

namespace skimzoom {

// --- Provider surface -------------------------------------------------------
//
// The captioning/judging model sits behind these interfaces.  Everything in
// this repository runs against the deterministic in-process fallbacks; the
// line-protocol implementations in providers.hpp forward to an external
// process instead.

class TextSimilarityProvider {
 public:
  virtual ~TextSimilarityProvider() = default;
  virtual double similarity(const std::string& a, const std::string& b) = 0;
};

// Fallback similarity: token-level F1 on lowercase word multisets.
class TokenF1Similarity final : public TextSimilarityProvider {
 public:
  double similarity(const std::string& a, const std::string& b) override;
};

class TextEmbedProvider {
 public:
  virtual ~TextEmbedProvider() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
};

class TextSummarizeProvider {
 public:
  virtual ~TextSummarizeProvider() = default;
  virtual std::string summarize(const std::vector<std::string>& texts) = 0;
};

// Fallback summarizer: first text verbatim (merged chunks share a caption in
// the offline pipeline, so the first one is already the segment caption).
class FirstTextSummarizer final : public TextSummarizeProvider {
 public:
  std::string summarize(const std::vector<std::string>& texts) override;
};

// --- Graph types -------------------------------------------------------------

// A fixed-length tile of the timeline with its caption.
struct Chunk {
  std::string chunk_id;
  Span span;
  std::string description;
};

// A maximal run of similar chunks.  Spans stay contiguous here (one span per
// node); disjoint recurrences of the same event are only grouped later, at
// QA-record conversion.
struct EventNode {
  std::string event_id;
  SpanSet spans;
  std::string description;
  std::vector<std::string> entities;
};

struct EventEdge {
  std::string from_event;
  std::string to_event;
  IntervalRelation relation;
};

// One surface-form cluster of entity mentions: (event_id, entity) pairs.
struct EntityCluster {
  std::string cluster_id;
  std::string representative;
  std::vector<std::pair<std::string, std::string>> members;
};

// --- Operations --------------------------------------------------------------

// Tiles [0, duration] into consecutive chunks of chunk_len seconds, last one
// shorter if needed: duration 10, len 3 -> (0,3)(3,6)(6,9)(9,10).
std::vector<Chunk> chunk_timeline(double duration_s, double chunk_len_s);

// Left-to-right merge scan: a chunk joins the open segment iff
// similarity(last chunk of the segment, incoming) >= threshold; otherwise it
// opens a new segment.  Node descriptions come from the summarizer; node
// entities from extract_entities on the description.
std::vector<EventNode> merge_chunks(const std::vector<Chunk>& chunks,
                                    TextSimilarityProvider& similarity, double threshold,
                                    TextSummarizeProvider* summarizer = nullptr);

// One edge per ordered pair of distinct nodes, labeled by the interval
// relation of their first spans.  Pair order is (i, j) over the node list, so
// output order is deterministic and relation(a,b) mirrors relation(b,a).
std::vector<EventEdge> derive_edges(const std::vector<EventNode>& nodes);

// Greedy agglomerative pass over every (event, entity) mention in order:
// join the first existing cluster whose representative matches with
// similarity >= link_threshold, else open a new cluster.  Similarity is
// cosine over embeddings when an embedder is supplied, token F1 otherwise.
std::vector<EntityCluster> cluster_entities(const std::vector<EventNode>& nodes,
                                            TextEmbedProvider* embedder, double link_threshold);

// Fallback entity extraction: lowercase content words of a caption (stopwords
// dropped), first-seen order, deduplicated.
std::vector<std::string> extract_entities(const std::string& description);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// --- Persistence ---------------------------------------------------------------
//
// Graphs persist as line-delimited JSON: node records then edge records, each
// line tagged {"type": "node"|"edge", ...}.

struct EventGraph {
  std::vector<EventNode> nodes;
  std::vector<EventEdge> edges;
};

void write_graph(const std::filesystem::path& path, const EventGraph& graph);
EventGraph read_graph(const std::filesystem::path& path);

}  // namespace skimzoom
