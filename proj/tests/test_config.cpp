#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mintime/config.hpp"
#include "mintime/errors.hpp"

using namespace mintime;

TEST_CASE("config defaults and overrides") {
  RunConfig cfg;
  CHECK(cfg.get_int("assemble.sequence_length") == 16);
  CHECK(cfg.get_int("train.max_identities") == 2);
  CHECK(cfg.get_double("train.lr_max") == doctest::Approx(0.01));
  cfg.set("model.depth", "3");
  CHECK(cfg.get_int("model.depth") == 3);
}

TEST_CASE("unknown keys are rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("model.width", "7"), ConfigError);
  CHECK_THROWS_AS(cfg.get("nope"), ConfigError);
}

TEST_CASE("dump lists every key and round-trips through a file") {
  RunConfig cfg;
  cfg.set("synth.num_videos", "17");
  const std::string dump = cfg.dump();
  for (const auto& key : cfg.keys())
    CHECK(dump.find(key + "=") != std::string::npos);

  const auto path = std::filesystem::temp_directory_path() / "mintime_cfg.txt";
  std::ofstream(path) << dump;
  RunConfig back;
  back.load_file(path.string());
  CHECK(back.get_int("synth.num_videos") == 17);
  std::filesystem::remove(path);
}

TEST_CASE("config file errors carry line numbers and reject unknown keys") {
  const auto path = std::filesystem::temp_directory_path() / "mintime_bad_cfg.txt";
  std::ofstream(path) << "# comment\nmodel.depth = 4\nbogus.key = 1\n";
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(cfg.load_file(path.string()), doctest::Contains(":3"), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("typed getters validate their input") {
  RunConfig cfg;
  cfg.set("model.depth", "two");
  CHECK_THROWS_AS(cfg.get_int("model.depth"), ConfigError);
  cfg.set("cluster.same_frame_guard", "maybe");
  CHECK_THROWS_AS(cfg.get_bool("cluster.same_frame_guard"), ConfigError);
  cfg.set("assemble.sorting", "alphabetical");
  CHECK_THROWS_AS(
      cfg.get_enum("assemble.sorting", {"size_based", "frequency_based", "random"}),
      ConfigError);
}

TEST_CASE("MINTIME_SEED env var is the seed fallback") {
  setenv("MINTIME_SEED", "777", 1);
  RunConfig with_env;
  CHECK(with_env.seed() == 777);
  with_env.set("seed", "5");
  CHECK(with_env.seed() == 5);  // explicit set wins
  unsetenv("MINTIME_SEED");
  RunConfig without_env;
  CHECK(without_env.seed() == 42);
}
