#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "skimzoom/event_graph.hpp"
#include "skimzoom/providers.hpp"
#include "skimzoom/util.hpp"
#include "test_helpers.hpp"

using namespace skimzoom;

namespace {

// A helper child covering the whole wire protocol, with scripted failures.
const char* kHelperScript = R"(import sys, json
for line in sys.stdin:
    req = json.loads(line)
    op = req['op']
    if op == 'similarity':
        if req['a'] == 'ERR':
            print(json.dumps({'ok': False, 'error': 'boom'}))
        elif req['a'] == 'GARBAGE':
            print('this is not json')
        elif req['a'] == 'NOVALUE':
            print(json.dumps({'ok': True}))
        else:
            print(json.dumps({'ok': True, 'value': 0.9 if req['a'] == req['b'] else 0.25}))
    elif op == 'embed':
        v = [1.0, 0.0] if 'x' in req['text'] else [0.0, 1.0]
        print(json.dumps({'ok': True, 'value': v}))
    elif op == 'summarize':
        print(json.dumps({'ok': True, 'value': ' + '.join(req['texts'])}))
    elif op == 'describe':
        print(json.dumps({'ok': True,
                          'value': '%s from %.2f to %.2f' % (req['video_id'], req['start_s'], req['end_s'])}))
    else:
        print(json.dumps({'ok': False, 'error': 'unknown op ' + op}))
    sys.stdout.flush()
)";

}  // namespace

TEST_CASE("the line protocol reaches every provider operation") {
  testutil::ScratchDir dir;
  write_text_file(dir.file("helper.py"), kHelperScript);
  LineProtocolProvider provider("python3 " + dir.file("helper.py").string());

  CHECK(provider.similarity("same", "same") == 0.9);
  CHECK(provider.similarity("one", "other") == 0.25);
  CHECK(provider.embed("box") == std::vector<double>{1.0, 0.0});
  CHECK(provider.embed("ball") == std::vector<double>{0.0, 1.0});
  CHECK(provider.summarize({"a", "b", "c"}) == "a + b + c");
  CHECK(provider.describe("vid9", 1.0, 2.5) == "vid9 from 1.00 to 2.50");
}

TEST_CASE("provider failures and protocol violations raise errors") {
  testutil::ScratchDir dir;
  write_text_file(dir.file("helper.py"), kHelperScript);
  LineProtocolProvider provider("python3 " + dir.file("helper.py").string());

  try {
    provider.similarity("ERR", "x");
    FAIL("expected a provider error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
  // The child is still alive and usable after a scripted failure.
  CHECK(provider.similarity("a", "a") == 0.9);

  CHECK_THROWS_AS(provider.similarity("GARBAGE", "x"), std::runtime_error);
  CHECK_THROWS_AS(provider.similarity("NOVALUE", "x"), std::runtime_error);
}

TEST_CASE("a dead provider child raises instead of hanging") {
  LineProtocolProvider provider("true");
  CHECK_THROWS_AS(provider.similarity("a", "b"), std::runtime_error);
}

TEST_CASE("a line-protocol child can drive the chunk merge directly") {
  testutil::ScratchDir dir;
  // Similarity keyed on shared first word, so captions merge per subject.
  write_text_file(dir.file("helper.py"),
                  "import sys, json\n"
                  "for line in sys.stdin:\n"
                  "    req = json.loads(line)\n"
                  "    same = req['a'].split()[0] == req['b'].split()[0]\n"
                  "    print(json.dumps({'ok': True, 'value': 1.0 if same else 0.0}))\n"
                  "    sys.stdout.flush()\n");
  LineProtocolProvider provider("python3 " + dir.file("helper.py").string());

  std::vector<Chunk> chunks = chunk_timeline(9.0, 3.0);
  REQUIRE(chunks.size() == 3);
  chunks[0].description = "chef chops";
  chunks[1].description = "chef stirs";
  chunks[2].description = "dog barks";
  auto nodes = merge_chunks(chunks, provider, 0.5);
  REQUIRE(nodes.size() == 2);
  CHECK(nodes[0].spans.spans().front().end_s == 6.0);
  CHECK(nodes[1].spans.spans().front().start_s == 6.0);
}
