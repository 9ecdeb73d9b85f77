#include "skimzoom/event_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "skimzoom/util.hpp"

namespace skimzoom {

double TokenF1Similarity::similarity(const std::string& a, const std::string& b) {
  return token_f1(a, b);
}

std::string FirstTextSummarizer::summarize(const std::vector<std::string>& texts) {
  return texts.empty() ? std::string() : texts.front();
}

std::vector<Chunk> chunk_timeline(double duration_s, double chunk_len_s) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("chunk_timeline: duration must be > 0");
  if (!(chunk_len_s > 0.0)) throw std::invalid_argument("chunk_timeline: chunk length must be > 0");
  std::vector<Chunk> out;
  int i = 0;
  for (double start = 0.0; start < duration_s; start = chunk_len_s * ++i) {
    double end = std::min(start + chunk_len_s, duration_s);
    if (end <= start) break;  // guard against float edge at the boundary
    Chunk c;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%04d", i);
    c.chunk_id = buf;
    c.span = Span{start, end};
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<EventNode> merge_chunks(const std::vector<Chunk>& chunks,
                                    TextSimilarityProvider& similarity, double threshold,
                                    TextSummarizeProvider* summarizer) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("merge_chunks: threshold must lie in [0,1]");
  }
  FirstTextSummarizer fallback;
  TextSummarizeProvider& summary = summarizer ? *summarizer : fallback;

  std::vector<EventNode> nodes;
  std::vector<std::vector<const Chunk*>> segments;
  for (const auto& c : chunks) {
    if (!segments.empty() &&
        similarity.similarity(segments.back().back()->description, c.description) >= threshold) {
      segments.back().push_back(&c);
    } else {
      segments.push_back({&c});
    }
  }

  for (std::size_t i = 0; i < segments.size(); ++i) {
    EventNode node;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "e%03zu", i);
    node.event_id = buf;
    node.spans = SpanSet::from_sorted(
        {Span{segments[i].front()->span.start_s, segments[i].back()->span.end_s}});
    std::vector<std::string> texts;
    for (const Chunk* c : segments[i]) texts.push_back(c->description);
    node.description = summary.summarize(texts);
    node.entities = extract_entities(node.description);
    nodes.push_back(std::move(node));
  }
  return nodes;
}

std::vector<EventEdge> derive_edges(const std::vector<EventNode>& nodes) {
  std::vector<EventEdge> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].spans.empty()) {
      throw std::invalid_argument("derive_edges: node without spans: " + nodes[i].event_id);
    }
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (i == j) continue;
      EventEdge e;
      e.from_event = nodes[i].event_id;
      e.to_event = nodes[j].event_id;
      e.relation = interval_relation(nodes[i].spans.spans().front(),
                                     nodes[j].spans.spans().front());
      edges.push_back(std::move(e));
    }
  }
  return edges;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: vectors must be non-empty and equal-sized");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<EntityCluster> cluster_entities(const std::vector<EventNode>& nodes,
                                            TextEmbedProvider* embedder, double link_threshold) {
  if (!(link_threshold >= 0.0 && link_threshold <= 1.0)) {
    throw std::invalid_argument("cluster_entities: threshold must lie in [0,1]");
  }
  struct Working {
    EntityCluster cluster;
    std::vector<double> embedding;
  };
  std::vector<Working> clusters;

  auto mention_similarity = [&](const Working& w, const std::string& entity,
                                const std::vector<double>& entity_emb) {
    if (embedder) return cosine_similarity(w.embedding, entity_emb);
    return token_f1(w.cluster.representative, entity);
  };

  for (const auto& node : nodes) {
    for (const auto& entity : node.entities) {
      std::vector<double> emb;
      if (embedder) emb = embedder->embed(entity);
      bool placed = false;
      for (auto& w : clusters) {
        if (mention_similarity(w, entity, emb) >= link_threshold) {
          w.cluster.members.emplace_back(node.event_id, entity);
          placed = true;
          break;
        }
      }
      if (!placed) {
        Working w;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "ent%03zu", clusters.size());
        w.cluster.cluster_id = buf;
        w.cluster.representative = entity;
        w.cluster.members.emplace_back(node.event_id, entity);
        w.embedding = std::move(emb);
        clusters.push_back(std::move(w));
      }
    }
  }
  std::vector<EntityCluster> out;
  out.reserve(clusters.size());
  for (auto& w : clusters) out.push_back(std::move(w.cluster));
  return out;
}

std::vector<std::string> extract_entities(const std::string& description) {
  static const std::set<std::string> kStopwords = {
      "a",    "an",   "the",  "and",  "or",   "of",   "in",    "on",    "at",
      "to",   "with", "is",   "are",  "was",  "were", "near",  "by",    "for",
      "from", "into", "over", "under", "then", "while", "as",   "its",   "their"};
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& w : tokenize_words(description)) {
    if (kStopwords.count(w)) continue;
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

namespace {

nlohmann::ordered_json spans_to_json(const SpanSet& spans) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : spans.spans()) {
    arr.push_back({round_two_decimals(s.start_s), round_two_decimals(s.end_s)});
  }
  return arr;
}

SpanSet spans_from_json(const nlohmann::json& arr) {
  std::vector<Span> spans;
  for (const auto& pair : arr) {
    spans.push_back(Span{pair.at(0).get<double>(), pair.at(1).get<double>()});
  }
  return SpanSet::from_sorted(std::move(spans));
}

}  // namespace

void write_graph(const std::filesystem::path& path, const EventGraph& graph) {
  std::string out;
  for (const auto& n : graph.nodes) {
    nlohmann::ordered_json j;
    j["type"] = "node";
    j["event_id"] = n.event_id;
    j["spans"] = spans_to_json(n.spans);
    j["description"] = n.description;
    j["entities"] = n.entities;
    out += j.dump();
    out += '\n';
  }
  for (const auto& e : graph.edges) {
    nlohmann::ordered_json j;
    j["type"] = "edge";
    j["from"] = e.from_event;
    j["to"] = e.to_event;
    j["relation"] = relation_name(e.relation.relation);
    j["inverted"] = e.relation.inverted;
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

EventGraph read_graph(const std::filesystem::path& path) {
  EventGraph graph;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": bad graph record: " + e.what());
    }
    std::string type = j.value("type", "");
    if (type == "node") {
      EventNode n;
      n.event_id = j.at("event_id").get<std::string>();
      n.spans = spans_from_json(j.at("spans"));
      n.description = j.value("description", "");
      if (j.contains("entities")) {
        n.entities = j["entities"].get<std::vector<std::string>>();
      }
      graph.nodes.push_back(std::move(n));
    } else if (type == "edge") {
      EventEdge e;
      e.from_event = j.at("from").get<std::string>();
      e.to_event = j.at("to").get<std::string>();
      e.relation.relation = relation_from_name(j.at("relation").get<std::string>());
      e.relation.inverted = j.value("inverted", false);
      graph.edges.push_back(std::move(e));
    } else {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": unknown graph record type: " + type);
    }
  }
  return graph;
}

}  // namespace skimzoom
