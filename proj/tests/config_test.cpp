#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "ramen/config.hpp"

using namespace ramen;

TEST_CASE("empty config keeps defaults") {
  std::istringstream in("");
  const RunConfig cfg = parse_config(in);
  CHECK(cfg.train.batch_size == 1024);
  CHECK(cfg.train.total_epochs == 300);
  CHECK(cfg.train.learning_rate == Catch::Approx(0.0002));
  CHECK(cfg.train.warmup_epochs == 10);
  CHECK(cfg.train.refine_epochs_per_cycle == 5);
  CHECK(cfg.train.cluster_refresh_epochs == 5);
  CHECK(cfg.train.cluster_size_doubling_epochs == 25);
  CHECK(cfg.train.optimizer == OptimizerKind::Adam);
  CHECK(cfg.loss.margin == Catch::Approx(0.3));
  CHECK(cfg.loss.num_positives == 2);
  CHECK(cfg.loss.num_hard_negatives == 12);
  CHECK(cfg.walk.hops == 400);
  CHECK(cfg.walk.restart_prob == Catch::Approx(0.8));
  CHECK(cfg.tokenizer.max_len == 32);
  CHECK(cfg.tokenizer.lowercase);
  CHECK(cfg.hidden == 64);
  CHECK(cfg.dim == 64);
}

TEST_CASE("values comments and blank lines are parsed") {
  std::istringstream in(
      "# a comment\n"
      "batch_size = 32\n"
      "\n"
      "learning_rate = 0.01   # trailing comment\n"
      "margin = 0.5\n"
      "optimizer = sgd\n"
      "ngram = trigram\n"
      "lowercase = false\n"
      "seed = 99\n"
      "hidden = 16\n"
      "dim = 8\n");
  const RunConfig cfg = parse_config(in);
  CHECK(cfg.train.batch_size == 32);
  CHECK(cfg.train.learning_rate == Catch::Approx(0.01));
  CHECK(cfg.loss.margin == Catch::Approx(0.5));
  CHECK(cfg.train.optimizer == OptimizerKind::Sgd);
  CHECK(cfg.tokenizer.ngram == NgramMode::CharTrigram);
  CHECK_FALSE(cfg.tokenizer.lowercase);
  CHECK(cfg.train.seed == 99);
  CHECK(cfg.hidden == 16);
  CHECK(cfg.dim == 8);
}

TEST_CASE("synthetic keys and seed defaulting") {
  {
    std::istringstream in("seed = 5\nnum_topics = 7\ntail_fraction = 0.25\n");
    const RunConfig cfg = parse_config(in);
    CHECK(cfg.synth.num_topics == 7);
    CHECK(cfg.synth.tail_fraction == Catch::Approx(0.25));
    CHECK(cfg.synth.seed == 5);  // follows the training seed by default
  }
  {
    std::istringstream in("seed = 5\nsynth_seed = 12\n");
    const RunConfig cfg = parse_config(in);
    CHECK(cfg.synth.seed == 12);
  }
}

TEST_CASE("unknown key errors name the key and line") {
  std::istringstream in("batch_size = 8\nbogus_key = 1\n");
  try {
    parse_config(in);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bogus_key") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
}

TEST_CASE("malformed lines and bad values are rejected") {
  {
    std::istringstream in("batch_size 8\n");
    CHECK_THROWS_AS(parse_config(in), std::invalid_argument);
  }
  {
    std::istringstream in("batch_size = pony\n");
    CHECK_THROWS_AS(parse_config(in), std::invalid_argument);
  }
  {
    std::istringstream in("optimizer = adagrad\n");
    CHECK_THROWS_AS(parse_config(in), std::invalid_argument);
  }
  {
    std::istringstream in("ngram = bigram\n");
    CHECK_THROWS_AS(parse_config(in), std::invalid_argument);
  }
}

TEST_CASE("lambda lists parse into per-set weights") {
  std::istringstream in("lambda_x = 0.5,0.25\nlambda_z = 2\n");
  const RunConfig cfg = parse_config(in);
  REQUIRE(cfg.loss.lambda_x.size() == 2);
  CHECK(cfg.loss.lambda_x[0] == Catch::Approx(0.5));
  CHECK(cfg.loss.lambda_x[1] == Catch::Approx(0.25));
  REQUIRE(cfg.loss.lambda_z.size() == 1);
  CHECK(cfg.loss.lambda_z[0] == Catch::Approx(2.0));
  CHECK(cfg.loss.lx(5) == Catch::Approx(0.25));  // last entry extends to later sets
  CHECK(cfg.loss.lz(3) == Catch::Approx(2.0));
}
