#include <random>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "skimzoom/frame_budget.hpp"
#include "skimzoom/util.hpp"
#include "test_helpers.hpp"

using namespace skimzoom;

namespace {

FrameSource dense(double duration_s, double fps = 100.0) {
  return FrameSource::uniform_grid("v", duration_s, fps);
}

SpanSet make(std::initializer_list<Span> spans) { return SpanSet::from_sorted(spans); }

}  // namespace

TEST_CASE("uniform_grid puts frames at bin centers inside the video") {
  FrameSource src = FrameSource::uniform_grid("v", 10.0, 4.0);
  REQUIRE(src.frame_timestamps.size() == 40);
  CHECK(src.frame_timestamps.front() == doctest::Approx(0.125));
  CHECK(src.frame_timestamps.back() == doctest::Approx(9.875));
  CHECK_NOTHROW(src.validate());
}

TEST_CASE("sample_global hits midpoint targets on a matching grid") {
  // Frames exactly at the midpoint targets for dur=100, n=4.
  FrameSource src;
  src.video_id = "v";
  src.duration_s = 100.0;
  src.frame_timestamps = {12.5, 37.5, 62.5, 87.5};
  auto result = sample_global(src, 4);
  REQUIRE(result.frames.size() == 4);
  CHECK(result.shortfall == 0);
  CHECK(result.frames[0].timestamp_s == doctest::Approx(12.5));
  CHECK(result.frames[1].timestamp_s == doctest::Approx(37.5));
  CHECK(result.frames[2].timestamp_s == doctest::Approx(62.5));
  CHECK(result.frames[3].timestamp_s == doctest::Approx(87.5));

  auto single = sample_global(src, 1);
  REQUIRE(single.frames.size() == 1);
  // Target 50.00 snaps to the nearest native frame; 37.5 and 62.5 tie, the
  // earlier one wins.
  CHECK(single.frames[0].timestamp_s == doctest::Approx(37.5));

  CHECK_THROWS_AS(sample_global(src, 0), std::invalid_argument);
  FrameSource empty;
  empty.video_id = "e";
  empty.duration_s = 10.0;
  CHECK_THROWS_AS(sample_global(empty, 1), std::invalid_argument);
}

TEST_CASE("sample_global collapses duplicate snaps into shortfall") {
  FrameSource src;
  src.video_id = "v";
  src.duration_s = 100.0;
  src.frame_timestamps = {50.0};  // every target snaps here
  auto result = sample_global(src, 8);
  CHECK(result.frames.size() == 1);
  CHECK(result.shortfall == 7);
}

TEST_CASE("sample_spans largest-remainder allocation fixture") {
  // Lengths 10 and 20 over n=6: quotas 2 and 4.
  auto result = sample_spans(dense(100.0), make({{10.0, 20.0}, {40.0, 60.0}}), 6, 1.5);
  REQUIRE(result.frames.size() == 6);
  CHECK(result.shortfall == 0);
  int in_first = 0;
  int in_second = 0;
  for (const auto& f : result.frames) {
    if (f.timestamp_s >= 10.0 && f.timestamp_s <= 20.0) ++in_first;
    if (f.timestamp_s >= 40.0 && f.timestamp_s <= 60.0) ++in_second;
  }
  CHECK(in_first == 2);
  CHECK(in_second == 4);
}

TEST_CASE("sample_spans single-span midpoints fixture") {
  // Span [0,30], n=3: targets 5, 15, 25.
  FrameSource src;
  src.video_id = "v";
  src.duration_s = 30.0;
  src.frame_timestamps = {5.0, 15.0, 25.0};
  auto result = sample_spans(src, make({{0.0, 30.0}}), 3, 1.5);
  REQUIRE(result.frames.size() == 3);
  CHECK(result.frames[0].timestamp_s == doctest::Approx(5.0));
  CHECK(result.frames[1].timestamp_s == doctest::Approx(15.0));
  CHECK(result.frames[2].timestamp_s == doctest::Approx(25.0));

  CHECK_THROWS_AS(sample_spans(src, SpanSet(), 3, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(sample_spans(src, make({{0.0, 30.0}}), 0, 1.5), std::invalid_argument);
}

TEST_CASE("sample_spans timestamps always lie inside the span union") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 500; ++i) {
    SpanSet spans = testutil::random_ms_spanset(rng, 4, 60000, false);
    FrameSource src = dense(60.0, 25.0);
    const int n = 1 + static_cast<int>(rng() % 64);
    auto result = sample_spans(src, spans, n, 1.5);
    CHECK(static_cast<int>(result.frames.size()) + result.shortfall == n);
    std::set<long long> seen;
    double prev = -1.0;
    for (const auto& f : result.frames) {
      CHECK(spans.contains(f.timestamp_s));
      CHECK(f.timestamp_s >= prev);
      prev = f.timestamp_s;
      CHECK(seen.insert(f.source_index).second);  // distinct native frames
    }
  }
}

TEST_CASE("sample_spans reports shortfall on sparse sources, never exceeds n") {
  FrameSource sparse;
  sparse.video_id = "v";
  sparse.duration_s = 100.0;
  sparse.frame_timestamps = {12.0, 13.0, 55.0};
  auto result = sample_spans(sparse, make({{10.0, 20.0}, {50.0, 60.0}}), 10, 1.5);
  CHECK(result.frames.size() == 3);  // every native frame in the union
  CHECK(result.shortfall == 7);

  // A span containing no native frame contributes only shortfall.
  auto nofr = sample_spans(sparse, make({{80.0, 90.0}}), 4, 1.5);
  CHECK(nofr.frames.empty());
  CHECK(nofr.shortfall == 4);
}

TEST_CASE("per-span cap shifts surplus to other spans") {
  // Lengths 89:10 over n=10 give 9 and 1 uncapped.  cap_factor=0.5 caps the
  // long span at ceil(0.5*10*89/99)=5 and the short one at 1; surplus beyond
  // every cap becomes shortfall rather than overflowing the budget.
  auto result = sample_spans(dense(100.0), make({{0.0, 89.0}, {90.0, 100.0}}), 10, 0.5);
  int in_long = 0;
  int in_short = 0;
  for (const auto& f : result.frames) {
    if (f.timestamp_s < 90.0) ++in_long;
    else ++in_short;
  }
  CHECK(in_long <= 5);
  CHECK(in_short <= 1);
  CHECK(static_cast<int>(result.frames.size()) + result.shortfall == 10);
}

TEST_CASE("budget config validation") {
  BudgetConfig ok;
  CHECK_NOTHROW(ok.validate());
  BudgetConfig bad = ok;
  bad.n_g = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.n_l = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.k_spans = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.m_max = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("manifest round trip") {
  testutil::ScratchDir dir;
  FrameSource src = FrameSource::uniform_grid("vid42", 12.0, 3.0);
  src.write_manifest(dir.file("vid42.tsv"));
  FrameSource back = FrameSource::from_manifest(dir.file("vid42.tsv"), "vid42", 12.0);
  REQUIRE(back.frame_timestamps.size() == src.frame_timestamps.size());
  for (std::size_t i = 0; i < src.frame_timestamps.size(); ++i) {
    CHECK(back.frame_timestamps[i] == doctest::Approx(src.frame_timestamps[i]));
  }
  CHECK(back.video_id == "vid42");
  CHECK(back.duration_s == doctest::Approx(12.0));

  write_text_file(dir.file("bad.tsv"), "0\t1.0\n2\t2.0\n");  // index gap
  CHECK_THROWS(FrameSource::from_manifest(dir.file("bad.tsv"), "bad", 10.0));
}

TEST_CASE("frame source validation rejects broken grids") {
  FrameSource src;
  src.video_id = "v";
  src.duration_s = 10.0;
  src.frame_timestamps = {1.0, 1.0};
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);  // not strictly increasing
  src.frame_timestamps = {1.0, 11.0};
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);  // outside duration
}
