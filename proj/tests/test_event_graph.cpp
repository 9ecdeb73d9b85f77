#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "skimzoom/event_graph.hpp"
#include "test_helpers.hpp"

using namespace skimzoom;

namespace {

// Similarity provider scripted over exact string pairs; anything unscripted
// scores zero.  Lets merge tests pin boundary behavior precisely.
class ScriptedSimilarity final : public TextSimilarityProvider {
 public:
  void script(const std::string& a, const std::string& b, double value) {
    table_[a + "\x1f" + b] = value;
    table_[b + "\x1f" + a] = value;
  }
  double similarity(const std::string& a, const std::string& b) override {
    auto it = table_.find(a + "\x1f" + b);
    return it == table_.end() ? 0.0 : it->second;
  }

 private:
  std::map<std::string, double> table_;
};

std::vector<Chunk> captioned_chunks(double duration_s, double len_s,
                                    const std::vector<std::string>& captions) {
  auto chunks = chunk_timeline(duration_s, len_s);
  REQUIRE(chunks.size() == captions.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i].description = captions[i];
  return chunks;
}

}  // namespace

TEST_CASE("chunk_timeline tiles the duration with a short tail") {
  auto chunks = chunk_timeline(10.0, 3.0);
  REQUIRE(chunks.size() == 4);
  CHECK(chunks[0].span.start_s == 0.0);
  CHECK(chunks[0].span.end_s == 3.0);
  CHECK(chunks[1].span.start_s == 3.0);
  CHECK(chunks[1].span.end_s == 6.0);
  CHECK(chunks[2].span.end_s == 9.0);
  CHECK(chunks[3].span.start_s == 9.0);
  CHECK(chunks[3].span.end_s == 10.0);

  auto tiny = chunk_timeline(2.0, 3.0);
  REQUIRE(tiny.size() == 1);
  CHECK(tiny[0].span.start_s == 0.0);
  CHECK(tiny[0].span.end_s == 2.0);

  auto exact = chunk_timeline(9.0, 3.0);
  CHECK(exact.size() == 3);

  CHECK_THROWS_AS(chunk_timeline(0.0, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(chunk_timeline(10.0, 0.0), std::invalid_argument);
}

TEST_CASE("chunk ids are distinct and ordered") {
  auto chunks = chunk_timeline(30.0, 3.0);
  std::set<std::string> ids;
  for (const auto& c : chunks) CHECK(ids.insert(c.chunk_id).second);
}

TEST_CASE("merge scan joins on similarity >= threshold, inclusive") {
  auto chunks = captioned_chunks(9.0, 3.0, {"c1", "c2", "c3"});
  ScriptedSimilarity sim;
  sim.script("c1", "c2", 0.9);
  sim.script("c2", "c3", 0.2);
  auto nodes = merge_chunks(chunks, sim, 0.85);
  REQUIRE(nodes.size() == 2);
  CHECK(nodes[0].spans.spans().size() == 1);
  CHECK(nodes[0].spans.spans()[0].start_s == 0.0);
  CHECK(nodes[0].spans.spans()[0].end_s == 6.0);  // c1+c2 merged
  CHECK(nodes[1].spans.spans()[0].start_s == 6.0);
  CHECK(nodes[1].spans.spans()[0].end_s == 9.0);

  // Exactly at the threshold still joins.
  ScriptedSimilarity at;
  at.script("c1", "c2", 0.85);
  at.script("c2", "c3", 0.85);
  auto joined = merge_chunks(chunks, at, 0.85);
  REQUIRE(joined.size() == 1);
  CHECK(joined[0].spans.spans()[0].end_s == 9.0);

  // The comparison anchor is the LAST chunk of the open segment.
  ScriptedSimilarity chain;
  chain.script("c1", "c2", 0.9);
  chain.script("c2", "c3", 0.9);
  chain.script("c1", "c3", 0.0);  // irrelevant if anchor is c2
  auto chained = merge_chunks(chunks, chain, 0.85);
  CHECK(chained.size() == 1);
}

TEST_CASE("merge scan degenerate thresholds") {
  auto chunks = captioned_chunks(9.0, 3.0, {"a b", "a b", "a b"});
  TokenF1Similarity f1;
  auto one = merge_chunks(chunks, f1, 0.0);  // everything joins
  CHECK(one.size() == 1);

  auto unlike = captioned_chunks(9.0, 3.0, {"aa bb", "cc dd", "ee ff"});
  auto all = merge_chunks(unlike, f1, 1.0);  // F1 of disjoint tokens is 0 < 1
  CHECK(all.size() == 3);

  CHECK(merge_chunks({}, f1, 0.5).empty());
  CHECK_THROWS_AS(merge_chunks(chunks, f1, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(merge_chunks(chunks, f1, -0.1), std::invalid_argument);
}

TEST_CASE("merged node takes the summarizer's description and its entities") {
  auto chunks = captioned_chunks(6.0, 3.0, {"a red car drives", "the red car stops"});
  TokenF1Similarity f1;
  FirstTextSummarizer first;
  auto nodes = merge_chunks(chunks, f1, 0.1, &first);
  REQUIRE(nodes.size() == 1);
  CHECK(nodes[0].description == "a red car drives");
  // extract_entities drops stopwords, keeps content words in order.
  auto ents = extract_entities("a red car drives");
  CHECK(nodes[0].entities == ents);
  CHECK(ents == std::vector<std::string>{"red", "car", "drives"});
}

TEST_CASE("extract_entities lowercases, dedups, keeps first-seen order") {
  auto ents = extract_entities("The Chef chops onions while the chef watches");
  CHECK(ents == std::vector<std::string>{"chef", "chops", "onions", "watches"});
  CHECK(extract_entities("the a of and").empty());
  CHECK(extract_entities("").empty());
}

TEST_CASE("derive_edges produces mirrored ordered pairs") {
  std::vector<Chunk> chunks = captioned_chunks(9.0, 3.0, {"x", "y", "z"});
  ScriptedSimilarity sim;  // nothing scripted: three singleton nodes
  auto nodes = merge_chunks(chunks, sim, 0.5);
  REQUIRE(nodes.size() == 3);
  auto edges = derive_edges(nodes);
  REQUIRE(edges.size() == 6);  // ordered pairs of 3 distinct nodes

  std::map<std::pair<std::string, std::string>, IntervalRelation> by_pair;
  for (const auto& e : edges) by_pair[{e.from_event, e.to_event}] = e.relation;
  for (const auto& [pair, rel] : by_pair) {
    auto mirror = by_pair.find({pair.second, pair.first});
    REQUIRE(mirror != by_pair.end());
    CHECK(mirror->second.relation == rel.relation);
    if (rel.relation != Relation::Equals) {
      CHECK(mirror->second.inverted != rel.inverted);
    }
  }
  // Consecutive 3s tiles meet.
  CHECK(by_pair[{nodes[0].event_id, nodes[1].event_id}].relation == Relation::Meets);
  CHECK_FALSE(by_pair[{nodes[0].event_id, nodes[1].event_id}].inverted);
  CHECK(by_pair[{nodes[1].event_id, nodes[0].event_id}].inverted);

  CHECK(derive_edges({nodes[0]}).empty());
  CHECK(derive_edges({}).empty());
}

TEST_CASE("cluster_entities groups near-identical surface forms") {
  EventNode n1;
  n1.event_id = "e1";
  n1.spans = SpanSet::from_sorted({{0.0, 3.0}});
  n1.entities = {"red car"};
  EventNode n2;
  n2.event_id = "e2";
  n2.spans = SpanSet::from_sorted({{3.5, 6.0}});
  n2.entities = {"a red car", "dog"};

  // token F1("red car", "a red car") = 2*2/(2+3) = 0.8 >= 0.75 -> same cluster.
  auto clusters = cluster_entities({n1, n2}, nullptr, 0.75);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].representative == "red car");
  REQUIRE(clusters[0].members.size() == 2);
  CHECK(clusters[0].members[0] == std::pair<std::string, std::string>("e1", "red car"));
  CHECK(clusters[0].members[1] == std::pair<std::string, std::string>("e2", "a red car"));
  CHECK(clusters[1].representative == "dog");

  // Raising the link threshold splits them.
  auto split = cluster_entities({n1, n2}, nullptr, 0.9);
  CHECK(split.size() == 3);

  CHECK(cluster_entities({}, nullptr, 0.75).empty());
}

TEST_CASE("cluster ids are distinct") {
  EventNode n;
  n.event_id = "e";
  n.spans = SpanSet::from_sorted({{0.0, 1.0}});
  n.entities = {"aaa", "bbb", "ccc"};
  auto clusters = cluster_entities({n}, nullptr, 0.99);
  REQUIRE(clusters.size() == 3);
  std::set<std::string> ids;
  for (const auto& c : clusters) CHECK(ids.insert(c.cluster_id).second);
}

namespace {
// Embedder scripted per string; unknown strings embed to a fixed axis.
class ScriptedEmbedder final : public TextEmbedProvider {
 public:
  void script(const std::string& s, std::vector<double> v) { table_[s] = std::move(v); }
  std::vector<double> embed(const std::string& s) override {
    auto it = table_.find(s);
    if (it != table_.end()) return it->second;
    return {1.0, 0.0};
  }

 private:
  std::map<std::string, std::vector<double>> table_;
};
}  // namespace

TEST_CASE("cluster_entities uses cosine similarity when an embedder is given") {
  EventNode n;
  n.event_id = "e";
  n.spans = SpanSet::from_sorted({{0.0, 1.0}});
  n.entities = {"u", "v", "w"};
  ScriptedEmbedder emb;
  emb.script("u", {1.0, 0.0});
  emb.script("v", {0.9, 0.1});   // cosine(u,v) ~ 0.9939
  emb.script("w", {0.0, 1.0});   // orthogonal to u
  auto clusters = cluster_entities({n}, &emb, 0.95);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].members.size() == 2);
  CHECK(clusters[1].representative == "w");
}

TEST_CASE("cosine_similarity fixtures") {
  CHECK(cosine_similarity({1.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(cosine_similarity({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
  CHECK(cosine_similarity({1.0, 1.0}, {1.0, 1.0}) == doctest::Approx(1.0));
  CHECK(cosine_similarity({1.0, 0.0}, {-1.0, 0.0}) == doctest::Approx(-1.0));
  CHECK(cosine_similarity({0.0, 0.0}, {1.0, 0.0}) == 0.0);  // zero norm scores zero
  CHECK_THROWS_AS(cosine_similarity({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(cosine_similarity({}, {}), std::invalid_argument);
}

TEST_CASE("graph files round trip nodes and edges") {
  testutil::ScratchDir dir;
  EventGraph graph;
  EventNode n1;
  n1.event_id = "e1";
  n1.spans = SpanSet::from_sorted({{0.0, 3.0}});
  n1.description = "a red car drives";
  n1.entities = {"red", "car", "drives"};
  EventNode n2;
  n2.event_id = "e2";
  n2.spans = SpanSet::from_sorted({{3.0, 7.5}});
  n2.description = "the car stops";
  n2.entities = {"car", "stops"};
  graph.nodes = {n1, n2};
  graph.edges = derive_edges(graph.nodes);

  write_graph(dir.file("g.ndjson"), graph);
  EventGraph back = read_graph(dir.file("g.ndjson"));
  REQUIRE(back.nodes.size() == 2);
  CHECK(back.nodes[0].event_id == "e1");
  CHECK(back.nodes[0].spans == n1.spans);
  CHECK(back.nodes[0].description == n1.description);
  CHECK(back.nodes[0].entities == n1.entities);
  REQUIRE(back.edges.size() == graph.edges.size());
  for (std::size_t i = 0; i < back.edges.size(); ++i) {
    CHECK(back.edges[i].from_event == graph.edges[i].from_event);
    CHECK(back.edges[i].to_event == graph.edges[i].to_event);
    CHECK(back.edges[i].relation == graph.edges[i].relation);
  }

  CHECK_THROWS(read_graph(dir.file("missing.ndjson")));
}

TEST_CASE("token F1 similarity is the fallback similarity") {
  TokenF1Similarity f1;
  CHECK(f1.similarity("red car", "a red car") == doctest::Approx(0.8));
  CHECK(f1.similarity("same text", "same text") == doctest::Approx(1.0));
  CHECK(f1.similarity("abc", "xyz") == doctest::Approx(0.0));
}
