#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "skimzoom/cli.hpp"
#include "skimzoom/grpo.hpp"
#include "skimzoom/interleave.hpp"
#include "skimzoom/qa_factory.hpp"
#include "skimzoom/util.hpp"
#include "test_helpers.hpp"

using namespace skimzoom;

namespace {

// Small corpus settings shared by the end-to-end tests.
std::vector<std::string> small_build_args(const std::string& out_dir, const std::string& seed) {
  return {"dataset",
          "build",
          "--seed",
          seed,
          "--set",
          "dataset.n_videos=6",
          "--set",
          "dataset.min_duration_s=60",
          "--set",
          "dataset.max_duration_s=90",
          "--set",
          "dataset.fps=2",
          "--out",
          out_dir};
}

std::map<std::string, double> metrics_from_ndjson(const std::filesystem::path& path) {
  std::map<std::string, double> out;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    out[j.at("metric").get<std::string>()] = j.at("value").get<double>();
  }
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 2, data errors exit 1, help exits 0") {
  CHECK(run_command({}) == 2);                         // a subcommand is required
  CHECK(run_command({"teleport"}) == 2);               // unknown subcommand
  CHECK(run_command({"dataset", "build"}) == 2);       // --out is required
  CHECK(run_command({"--help"}) == 0);
  CHECK(run_command({"dataset", "--help"}) == 0);
  CHECK(run_command({"pipeline", "run", "--help"}) == 0);

  testutil::ScratchDir dir;
  // Missing seed is a data/configuration problem, not a usage problem.
  CHECK(run_command({"dataset", "build", "--out", dir.file("d").string()}) == 1);
  // Missing files likewise.
  CHECK(run_command({"dataset", "stats", "--dataset", dir.file("nope.ndjson").string()}) == 1);
  CHECK(run_command({"eval", "qa", "--pred", dir.file("p.ndjson").string(), "--gold",
                     dir.file("g.ndjson").string()}) == 1);
  // Bad option values are usage errors.
  CHECK(run_command({"pipeline", "run", "--preset", "E", "--dataset", "x", "--videos", "y",
                     "--manifests", "z"}) == 2);
  // Bad --set assignments are configuration problems.
  CHECK(run_command({"dataset", "build", "--seed", "1", "--set", "grpo.warp=1", "--out",
                     dir.file("d2").string()}) == 1);
}

TEST_CASE("dataset builds are byte-identical under the same seed") {
  testutil::ScratchDir dir;
  const std::string a = dir.file("a").string();
  const std::string b = dir.file("b").string();
  const std::string c = dir.file("c").string();
  REQUIRE(run_command(small_build_args(a, "42")) == 0);
  REQUIRE(run_command(small_build_args(b, "42")) == 0);
  REQUIRE(run_command(small_build_args(c, "43")) == 0);

  for (const char* name : {"dataset.ndjson", "videos.ndjson", "review.ndjson", "splits.json",
                           "stats.json"}) {
    CHECK(read_text_file(dir.file("a") / name) == read_text_file(dir.file("b") / name));
  }
  CHECK(read_text_file(dir.file("a") / "dataset.ndjson") !=
        read_text_file(dir.file("c") / "dataset.ndjson"));

  // The build emits per-video event graphs and frame manifests alongside.
  auto videos = read_lines(dir.file("a") / "videos.ndjson");
  CHECK(videos.size() == 6);
  for (const std::string& line : videos) {
    auto j = nlohmann::json::parse(line);
    const std::string vid = j.at("video_id").get<std::string>();
    CHECK(std::filesystem::exists(dir.file("a") / "graphs" / (vid + ".ndjson")));
    CHECK(std::filesystem::exists(dir.file("a") / "manifests" / (vid + ".tsv")));
  }

  // Every shipped record passed review; the split covers every video once.
  auto records = read_dataset(dir.file("a") / "dataset.ndjson");
  CHECK(!records.empty());
  auto splits = read_split_manifest(dir.file("a") / "splits.json");
  std::set<std::string> split_videos;
  std::size_t split_total = 0;
  for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
    split_total += part->size();
    split_videos.insert(part->begin(), part->end());
  }
  std::set<std::string> record_videos;
  for (const auto& r : records) record_videos.insert(r.video_id);
  CHECK(split_videos == record_videos);
  CHECK(split_total == split_videos.size());
}

TEST_CASE("the full flow runs: build, answer, evaluate, score, and train-side math") {
  testutil::ScratchDir dir;
  const std::string data = dir.file("data").string();
  REQUIRE(run_command(small_build_args(data, "7")) == 0);
  const std::string dataset = (dir.file("data") / "dataset.ndjson").string();
  const std::string videos = (dir.file("data") / "videos.ndjson").string();
  const std::string manifests = (dir.file("data") / "manifests").string();

  // Answer with the gold-echo backend under the two-stage preset.
  const std::string results = dir.file("results.ndjson").string();
  REQUIRE(run_command({"pipeline", "run", "--seed", "7", "--dataset", dataset, "--videos",
                       videos, "--manifests", manifests, "--backend", "gold", "--preset", "D",
                       "--out", results, "--trace-requests",
                       dir.file("trace.ndjson").string()}) == 0);

  // Grounding and answer metrics are perfect by construction.
  const std::string gm = dir.file("grounding.ndjson").string();
  REQUIRE(run_command({"eval", "grounding", "--pred", results, "--gold", dataset, "--out", gm}) ==
          0);
  auto grounding = metrics_from_ndjson(gm);
  CHECK(grounding.at("mIoU") == 100.0);
  CHECK(grounding.at("recall@0.70") == 100.0);
  CHECK(grounding.at("missing_predictions") == 0.0);

  const std::string qm = dir.file("qa.ndjson").string();
  REQUIRE(run_command({"eval", "qa", "--pred", results, "--gold", dataset, "--out", qm}) == 0);
  CHECK(metrics_from_ndjson(qm).at("accuracy") == 100.0);

  // The trace holds two envelopes per item: one skim, one zoom.
  auto records = read_dataset(dataset);
  auto trace = read_lines(dir.file("trace.ndjson"));
  trace.erase(std::remove(trace.begin(), trace.end(), std::string()), trace.end());
  CHECK(trace.size() == 2 * records.size());

  // Canonical responses score the full reward through the scoring command.
  std::string responses;
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["item_id"] = rec.item_id();
    j["response"] = render_response(rec.time_spans, "", rec.correct_answer);
    responses += j.dump() + "\n";
  }
  write_text_file(dir.file("responses.ndjson"), responses);
  const std::string scores = dir.file("scores.ndjson").string();
  REQUIRE(run_command({"reward", "score", "--responses", dir.file("responses.ndjson").string(),
                       "--dataset", dataset, "--videos", videos, "--out", scores}) == 0);
  auto score_lines = read_lines(scores);
  score_lines.erase(std::remove(score_lines.begin(), score_lines.end(), std::string()),
                    score_lines.end());
  REQUIRE(score_lines.size() == records.size());
  for (const std::string& line : score_lines) {
    CHECK(nlohmann::json::parse(line).at("r_total").get<double>() == 1.0);
  }

  // Rollout sampling, advantages, and the objective value.
  const std::string rollouts = dir.file("rollouts.ndjson").string();
  REQUIRE(run_command({"pipeline", "run", "--seed", "7", "--dataset", dataset, "--videos",
                       videos, "--manifests", manifests, "--backend", "random", "--limit", "6",
                       "--rollouts-out", rollouts, "--group-size", "3"}) == 0);
  auto groups = read_rollout_groups(rollouts);
  REQUIRE(groups.size() == 6);
  for (const auto& g : groups) {
    CHECK(g.rollouts.size() == 3);
    CHECK(g.advantages.empty());  // sampling does not pre-fill advantages
  }

  const std::string adv = dir.file("advantages.ndjson").string();
  REQUIRE(run_command({"grpo", "advantages", "--rollouts", rollouts, "--out", adv}) == 0);
  for (const auto& g : read_rollout_groups(adv)) {
    REQUIRE(g.advantages.size() == g.rollouts.size());
    double sum = 0.0;
    for (double a : g.advantages) sum += a;
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-9));
  }
  REQUIRE(run_command({"grpo", "advantages", "--rollouts", rollouts, "--out",
                       dir.file("norm.ndjson").string(), "--normalize"}) == 0);
  REQUIRE(run_command({"grpo", "objective", "--rollouts", adv, "--kl-coef", "0.1"}) == 0);

  // Review and split commands run standalone over the shipped dataset.
  REQUIRE(run_command({"dataset", "review", "--dataset", dataset, "--out",
                       dir.file("review2.ndjson").string()}) == 0);
  auto review_lines = read_lines(dir.file("review2.ndjson"));
  review_lines.erase(std::remove(review_lines.begin(), review_lines.end(), std::string()),
                     review_lines.end());
  REQUIRE(review_lines.size() == records.size());
  for (const std::string& line : review_lines) {
    CHECK(nlohmann::json::parse(line).at("accepted").get<bool>());
  }
  REQUIRE(run_command({"dataset", "split", "--seed", "7", "--dataset", dataset, "--out",
                       dir.file("splits2.json").string()}) == 0);
  CHECK(read_text_file(dir.file("splits2.json")) ==
        read_text_file(dir.file("data") / "splits.json"));
  REQUIRE(run_command({"dataset", "stats", "--dataset", dataset, "--out",
                       dir.file("stats2.json").string()}) == 0);
  CHECK(nlohmann::json::parse(read_text_file(dir.file("stats2.json"))).contains("record_count"));
}

TEST_CASE("concurrency never changes pipeline results") {
  testutil::ScratchDir dir;
  const std::string data = dir.file("data").string();
  REQUIRE(run_command(small_build_args(data, "11")) == 0);
  const std::string dataset = (dir.file("data") / "dataset.ndjson").string();
  const std::string videos = (dir.file("data") / "videos.ndjson").string();
  const std::string manifests = (dir.file("data") / "manifests").string();

  for (const char* backend : {"random", "malformed"}) {
    const auto serial = dir.file(std::string("serial-") + backend + ".ndjson");
    const auto threaded = dir.file(std::string("threaded-") + backend + ".ndjson");
    REQUIRE(run_command({"pipeline", "run", "--seed", "3", "--dataset", dataset, "--videos",
                         videos, "--manifests", manifests, "--backend", backend, "--out",
                         serial.string(), "--jobs", "1"}) == 0);
    REQUIRE(run_command({"pipeline", "run", "--seed", "3", "--dataset", dataset, "--videos",
                         videos, "--manifests", manifests, "--backend", backend, "--out",
                         threaded.string(), "--jobs", "4"}) == 0);
    CHECK(read_text_file(serial) == read_text_file(threaded));
  }
}

TEST_CASE("config files feed the command line with overrides on top") {
  testutil::ScratchDir dir;
  write_text_file(dir.file("run.ini"),
                  "seed = 21\n"
                  "[dataset]\n"
                  "n_videos = 3\n"
                  "min_duration_s = 60\n"
                  "max_duration_s = 60\n"
                  "fps = 2\n");
  const std::string out = dir.file("out").string();
  REQUIRE(run_command({"dataset", "build", "--config", dir.file("run.ini").string(), "--set",
                       "dataset.n_videos=4", "--out", out}) == 0);
  auto videos = read_lines(dir.file("out") / "videos.ndjson");
  videos.erase(std::remove(videos.begin(), videos.end(), std::string()), videos.end());
  CHECK(videos.size() == 4);  // the override beat the file
  for (const std::string& line : videos) {
    CHECK(nlohmann::json::parse(line).at("duration_s").get<double>() == 60.0);
  }

  // --seed beats run.seed from the file.
  const std::string reseeded = dir.file("reseeded").string();
  REQUIRE(run_command({"dataset", "build", "--config", dir.file("run.ini").string(), "--set",
                       "dataset.n_videos=4", "--seed", "22", "--out", reseeded}) == 0);
  CHECK(read_text_file(dir.file("out") / "dataset.ndjson") !=
        read_text_file(dir.file("reseeded") / "dataset.ndjson"));

  // A config file that fails validation is a configuration error.
  write_text_file(dir.file("bad.ini"), "[eval]\nthresholds = 0.9, 0.1\n");
  CHECK(run_command({"dataset", "build", "--config", dir.file("bad.ini").string(), "--seed", "1",
                     "--out", dir.file("x").string()}) == 1);
}
