#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "sfl/config.hpp"

using namespace sfl;

TEST_CASE("defaults match the reference hyperparameter set") {
  RunConfig cfg;
  // SF learning
  CHECK(cfg.get("sf.hidden") == "512");
  CHECK(cfg.sf.lr == 5e-4);
  CHECK(cfg.sf.batch == 128);
  CHECK(cfg.sf.n_step == 1);
  CHECK(cfg.sf.buffer_capacity == 20000);
  CHECK(cfg.sf.gamma == 0.99);
  CHECK(cfg.sf.target_update_interval == 250);
  CHECK(cfg.sf.grad_clip == 1.0);
  CHECK(cfg.sf.samplers == 1);
  // graph, planner, navigation
  CHECK(cfg.graph.delta_add == 0.99);
  CHECK(cfg.graph.delta_local == 1.0);
  CHECK(cfg.graph.delta_edge == 1.0);
  CHECK(cfg.graph.edge_threshold_mode == "fixed");
  CHECK(cfg.graph.landmark_cap == 10);
  CHECK(cfg.agent.n_front == 40);
  CHECK(cfg.agent.n_explore == 40);
  CHECK(cfg.sfs.epsilon_train == 0.1);
  CHECK(cfg.sfs.epsilon_eval == 0.05);
  // candidate/refresh cadences and per-path step multiplier
  CHECK(cfg.graph.n_cand == 1);
  CHECK(cfg.graph.n_add == 3000);
  CHECK(cfg.graph.n_update == 1000);
  CHECK(cfg.graph.n_form_edges == 1000);
  CHECK(cfg.agent.n_land == 8);
  // encoder
  CHECK(cfg.encoder.margin == 2.0);
  CHECK(cfg.encoder.alpha == 10.0);
  CHECK(cfg.encoder.positive_window == 2);
  CHECK(cfg.encoder.negative_near == 10);
  CHECK(cfg.encoder.negative_far == 15);
  CHECK(cfg.encoder.lr == 5e-4);
  CHECK(cfg.encoder.batch == 128);
  // aggregation and filters are off by default on fully observable grids
  CHECK(cfg.sfs.window == 1);
  CHECK_FALSE(cfg.graph.temporal_filter);
  CHECK(cfg.graph.tau_temporal == 0.1);
  CHECK(cfg.graph.k_nearest == 5);
  CHECK(cfg.graph.failure_forget_window == 80000);
  CHECK(cfg.agent.k_goal == 5);
}

TEST_CASE("set and get round-trip") {
  RunConfig cfg;
  cfg.set("sf.gamma", "0.5");
  CHECK(cfg.sf.gamma == 0.5);
  CHECK(cfg.get("sf.gamma") == "0.5");
  cfg.set("sf.hidden", "64,32");
  CHECK(cfg.sf.hidden == std::vector<int>{64, 32});
  cfg.set("sf.hidden", "");
  CHECK(cfg.sf.hidden.empty());
  cfg.set("graph.temporal_filter", "true");
  CHECK(cfg.graph.temporal_filter);
  cfg.set("run.seed", "1234");
  CHECK(cfg.seed == 1234);
}

TEST_CASE("unknown keys and malformed values name the field") {
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(cfg.set("sf.nonsense", "1"),
                       doctest::Contains("sf.nonsense"), ConfigError);
  CHECK_THROWS_WITH_AS(cfg.set("sf.gamma", "fast"), doctest::Contains("sf.gamma"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(cfg.set("sf.batch", "12.5"), doctest::Contains("sf.batch"),
                       ConfigError);
  CHECK_THROWS_AS(cfg.get("nope.nope"), ConfigError);
}

TEST_CASE("config file loading and precedence") {
  std::string path = "test_config_tmp.ini";
  {
    std::ofstream out(path);
    out << "# comment\n";
    out << "[run]\n";
    out << "seed = 9\n";
    out << "steps = 1000\n";
    out << "[sf]\n";
    out << "gamma = 0.9\n";
  }
  RunConfig cfg;
  cfg.load_file(path);
  CHECK(cfg.seed == 9);
  CHECK(cfg.steps == 1000);
  CHECK(cfg.sf.gamma == 0.9);
  // flags land after the file and win
  cfg.set("sf.gamma", "0.8");
  CHECK(cfg.sf.gamma == 0.8);
  std::remove(path.c_str());

  CHECK_THROWS_AS(cfg.load_file("does_not_exist.ini"), ConfigError);
}

TEST_CASE("canonical dump and hash") {
  RunConfig a;
  RunConfig b;
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  b.set("sf.gamma", "0.5");
  CHECK(a.hash() != b.hash());

  // canonical text parses back to the same configuration
  RunConfig c;
  std::string path = "test_canonical_tmp.ini";
  {
    std::ofstream out(path);
    out << b.canonical();
  }
  c.load_file(path);
  CHECK(c.hash() == b.hash());
  std::remove(path.c_str());
}

TEST_CASE("validation") {
  RunConfig cfg;
  cfg.mode = "train";
  cfg.map = "whatever.txt";
  CHECK_NOTHROW(cfg.validate());

  SUBCASE("mode") {
    cfg.mode = "dance";
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("run.mode"), ConfigError);
  }
  SUBCASE("gamma domain") {
    cfg.sf.gamma = 1.0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("sf.gamma"), ConfigError);
  }
  SUBCASE("missing map") {
    cfg.map = "";
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("run.map"), ConfigError);
  }
  SUBCASE("epsilon range") {
    cfg.sfs.epsilon_eval = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("eval needs no map") {
    cfg.mode = "eval";
    cfg.map = "";
    cfg.checkpoint = "x.sfl";
    CHECK_NOTHROW(cfg.validate());
  }
}

TEST_CASE("coordinate parsing") {
  StateCoords c = parse_coords("3,4,N");
  CHECK(c.x == 3);
  CHECK(c.y == 4);
  CHECK(c.heading == 0);
  CHECK(parse_coords("1,1,E").heading == 1);
  CHECK(parse_coords("1,1,s").heading == 2);
  CHECK(parse_coords("1,1,3").heading == 3);
  CHECK_THROWS_AS(parse_coords("1,1"), ConfigError);
  CHECK_THROWS_AS(parse_coords("1,1,Q"), ConfigError);
  CHECK_THROWS_AS(parse_coords("1,1,7"), ConfigError);
}
