#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slosim/config.hpp"
#include "slosim/errors.hpp"
#include "slosim/report.hpp"

using namespace slosim;

TEST_CASE("flat key=value parsing with comments and dotted keys") {
  auto cfg = Config::from_string(
      "# scenario\n"
      "slo.lambda_s = 2.0\n"
      "slo.min_mem_gb = 2\n"
      "forecaster.n_grid = 10, 15, 20, 25, 30\n"
      "trace.csv = data/trace.csv\n"
      "sim.oracle = true   # inline comment\n",
      "/cfg");
  CHECK(cfg.get_double("slo.lambda_s") == 2.0);
  CHECK(cfg.get_int("slo.min_mem_gb") == 2);
  CHECK(cfg.get_bool("sim.oracle", false));
  CHECK(cfg.get_list("forecaster.n_grid") == std::vector<double>{10, 15, 20, 25, 30});
  CHECK(cfg.get_path("trace.csv") == "/cfg/data/trace.csv");
  CHECK(cfg.get_string("missing", "fallback") == "fallback");
  CHECK_THROWS_AS(cfg.get_string("missing"), ConfigError);
  CHECK_THROWS_AS(cfg.get_double("trace.csv"), ConfigError);
}

TEST_CASE("overrides replace keys one-to-one") {
  auto cfg = Config::from_string("sim.seed = 1\n");
  CHECK(cfg.get_int("sim.seed") == 1);
  cfg.set("sim.seed", "42");
  CHECK(cfg.get_int("sim.seed") == 42);
}

TEST_CASE("bad syntax is rejected with a line number") {
  CHECK_THROWS_AS(Config::from_string("just a line without equals\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("= value\n"), ConfigError);
  auto cfg = Config::from_string("x = maybe\n");
  CHECK_THROWS_AS(cfg.get_bool("x", false), ConfigError);
}

TEST_CASE("absolute paths bypass the base directory") {
  auto cfg = Config::from_string("trace.csv = /abs/trace.csv\n", "/cfg");
  CHECK(cfg.get_path("trace.csv") == "/abs/trace.csv");
  CHECK(!cfg.get_path_opt("other").has_value());
}

TEST_CASE("fnv1a64 content hash is stable") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("hello") == fnv1a64("hello"));
  CHECK(fnv1a64("hello") != fnv1a64("hellp"));
}
