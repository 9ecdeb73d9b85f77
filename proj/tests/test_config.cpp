#include <stdexcept>
#include <string>

#include "doctest.h"
#include "skimzoom/config.hpp"
#include "skimzoom/util.hpp"
#include "test_helpers.hpp"

using namespace skimzoom;

TEST_CASE("an empty config yields the documented defaults") {
  RunConfig c = parse_run_config("");
  CHECK(c.budget.n_g == 64);
  CHECK(c.budget.n_l == 64);
  CHECK(c.budget.m_max == 5);
  CHECK(c.budget.k_spans == 5);
  CHECK(c.budget.cap_factor == 1.5);

  CHECK(c.reward.alpha == 0.1);
  CHECK(c.reward.beta == 0.1);
  CHECK(c.reward.gamma0 == 0.3);
  CHECK(c.reward.gamma1 == 0.7);
  CHECK(c.reward.ramp_steps == 1000);
  CHECK(c.reward.shaping_thresholds.empty());

  CHECK(c.grpo.eps == 1e-8);
  CHECK(c.grpo.kl_coef == 0.0);
  CHECK(c.grpo.group_size == 3);
  CHECK_FALSE(c.grpo.normalize);
  CHECK(c.grpo.teacher_force_ratio == 0.5);

  CHECK(c.dataset.n_videos == 20);
  CHECK(c.dataset.min_duration_s == 120.0);
  CHECK(c.dataset.max_duration_s == 300.0);
  CHECK(c.dataset.fps == 4.0);
  CHECK(c.dataset.chunk_len_s == 3.0);
  CHECK(c.dataset.min_events == 4);
  CHECK(c.dataset.max_events == 8);
  CHECK(c.dataset.train_ratio == 0.90);

  CHECK(c.backend.kind == "gold");
  CHECK(c.backend.retries == 2);
  CHECK(c.backend.backoff_ms == 100);

  CHECK(c.eval.thresholds == std::vector<double>{0.3, 0.5, 0.7});
  CHECK_FALSE(c.eval.single_best);
  CHECK_FALSE(c.seed.has_value());
}

TEST_CASE("a full config file reaches every section") {
  const std::string text = R"(
# run-level keys live outside any section
seed = 12345

[budget]
n_g = 32
n_l = 96
m_max = 4
k_spans = 3
cap_factor = 2.0

[reward]
alpha = 0.2
beta = 0.05
gamma0 = 0.4
gamma1 = 0.6
ramp_steps = 500
shaping = 0.3:0.5, 0.5:0.75, 0.7:1.0
length_penalty_rate = 0.0002
length_penalty_cap_chars = 1500

[grpo]
eps = 1e-6
kl_coef = 0.25
group_size = 8
normalize = true
teacher_force_ratio = 0.75

[dataset]
n_videos = 50
min_duration_s = 60
max_duration_s = 90
fps = 2
chunk_len_s = 5
min_events = 5
max_events = 6
recurrence_prob = 0.5
merge_threshold = 0.9
dup_threshold = 0.7
link_threshold = 0.8
train_ratio = 0.8
val_ratio = 0.1
test_ratio = 0.1

[backend]
kind = random
retries = 5
backoff_ms = 10

[eval]
thresholds = 0.25, 0.5, 0.75
single_best = yes
)";
  RunConfig c = parse_run_config(text, "full.ini");
  REQUIRE(c.seed.has_value());
  CHECK(*c.seed == 12345);
  CHECK(c.budget.n_g == 32);
  CHECK(c.budget.n_l == 96);
  CHECK(c.budget.cap_factor == 2.0);
  CHECK(c.reward.alpha == 0.2);
  REQUIRE(c.reward.shaping_thresholds.size() == 3);
  CHECK(c.reward.shaping_thresholds[1].threshold == 0.5);
  CHECK(c.reward.shaping_thresholds[1].bonus == 0.75);
  CHECK(c.reward.length_penalty_rate == 0.0002);
  CHECK(c.reward.length_penalty_cap_chars == 1500);
  CHECK(c.grpo.eps == 1e-6);
  CHECK(c.grpo.kl_coef == 0.25);
  CHECK(c.grpo.group_size == 8);
  CHECK(c.grpo.normalize);
  CHECK(c.grpo.teacher_force_ratio == 0.75);
  CHECK(c.dataset.n_videos == 50);
  CHECK(c.dataset.max_events == 6);
  CHECK(c.backend.kind == "random");
  CHECK(c.backend.retries == 5);
  CHECK(c.eval.thresholds == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(c.eval.single_best);
}

TEST_CASE("comments, blanks, and an explicit [run] header are all accepted") {
  const std::string text =
      "; semicolon comment\n"
      "\n"
      "[run]\n"
      "seed = 7\n"
      "# hash comment\n"
      "[grpo]\n"
      "  group_size   =   4  \n";
  RunConfig c = parse_run_config(text);
  CHECK(*c.seed == 7);
  CHECK(c.grpo.group_size == 4);
}

TEST_CASE("shaping accepts the literal none to switch the bonus off") {
  RunConfig base = parse_run_config("[reward]\nshaping = 0.3:0.5\n");
  CHECK(base.reward.shaping_thresholds.size() == 1);
  RunConfig off = parse_run_config("[reward]\nshaping = none\n");
  CHECK(off.reward.shaping_thresholds.empty());
  CHECK_THROWS_WITH_AS(parse_run_config("[reward]\nshaping = 0.3-0.5\n", "s.ini"),
                       doctest::Contains("s.ini:2"), std::runtime_error);
}

TEST_CASE("parse errors carry the origin and line number") {
  CHECK_THROWS_WITH_AS(parse_run_config("[warp]\n", "bad.ini"), doctest::Contains("bad.ini:1"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_run_config("\n\n[grpo]\nwarp = 1\n", "bad.ini"),
                       doctest::Contains("bad.ini:4"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_run_config("[grpo]\ngroup_size = soon\n", "bad.ini"),
                       doctest::Contains("bad.ini:2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_run_config("[grpo]\nnormalize = maybe\n", "bad.ini"),
                       doctest::Contains("bad.ini:2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_run_config("just words\n", "bad.ini"),
                       doctest::Contains("bad.ini:1"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_run_config("[grpo\n", "bad.ini"), doctest::Contains("bad.ini:1"),
                       std::runtime_error);
  CHECK_THROWS_AS(parse_run_config("seed = -4\n"), std::runtime_error);
  // Keys cannot reach across sections.
  CHECK_THROWS_AS(parse_run_config("[budget]\nkl_coef = 0.5\n"), std::runtime_error);
}

TEST_CASE("the whole config is validated after parsing") {
  CHECK_THROWS_AS(parse_run_config("[eval]\nthresholds = 0.5, 0.3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[eval]\nthresholds = 0.5, 1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[dataset]\ntrain_ratio = 0.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[budget]\nn_g = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[grpo]\neps = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[grpo]\nteacher_force_ratio = 1.5\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[backend]\nkind = telepathy\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[backend]\nkind = http\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[backend]\nkind = pipe\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[dataset]\nmin_events = 0\n"), std::invalid_argument);
  CHECK_NOTHROW(parse_run_config("[backend]\nkind = http\nendpoint = http://h:1\n"));
}

TEST_CASE("overrides reuse the key table and allow the seed shorthand") {
  RunConfig c = parse_run_config("");
  apply_override(c, "grpo.kl_coef=0.5");
  CHECK(c.grpo.kl_coef == 0.5);
  apply_override(c, "seed=99");
  REQUIRE(c.seed.has_value());
  CHECK(*c.seed == 99);
  apply_override(c, "run.seed=100");
  CHECK(*c.seed == 100);
  apply_override(c, "eval.thresholds = 0.4, 0.6");
  CHECK(c.eval.thresholds == std::vector<double>{0.4, 0.6});
  CHECK_THROWS_AS(apply_override(c, "grpo.warp=1"), std::runtime_error);
  CHECK_THROWS_AS(apply_override(c, "no equals sign"), std::runtime_error);
}

TEST_CASE("configs load from disk with the path in error messages") {
  testutil::ScratchDir dir;
  write_text_file(dir.file("run.ini"), "[grpo]\ngroup_size = 6\n");
  RunConfig c = load_run_config(dir.file("run.ini"));
  CHECK(c.grpo.group_size == 6);

  write_text_file(dir.file("broken.ini"), "[nope]\n");
  try {
    load_run_config(dir.file("broken.ini"));
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("broken.ini:1") != std::string::npos);
  }
  CHECK_THROWS(load_run_config(dir.file("missing.ini")));
}
