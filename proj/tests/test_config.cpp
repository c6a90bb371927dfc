#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semloc/config.hpp"
#include "semloc/errors.hpp"

using namespace semloc;

TEST_CASE("defaults validate and carry the documented values") {
  const PipelineConfig cfg = default_config();
  cfg.validate();
  CHECK(cfg.blobs.min_blob_size == 200);
  CHECK(cfg.blobs.smoothing_radius == 4);
  CHECK(cfg.graph.merge_distance == 10.0);
  CHECK(cfg.graph.query_frames == 5);
  CHECK(cfg.walks.num_walks == 200);
  CHECK(cfg.walks.walk_depth == 4);
  CHECK(cfg.matching.k == 5);
  CHECK(cfg.ransac.iterations == 500);
  CHECK(cfg.backend.weights.sigma_odom_translation == 0.1);
  CHECK(cfg.backend.weights.sigma_odom_rotation == 0.01);
  CHECK(cfg.backend.weights.sigma_vertex == 1.0);
  CHECK(cfg.backend.weights.sigma_match == 2.0);
  CHECK(cfg.resolved_t_l() == 20.0);  // 2 x merge_distance
}

TEST_CASE("serialize/parse is the identity on the effective config") {
  PipelineConfig cfg = default_config();
  cfg.graph.merge_distance = 7.25;
  cfg.blobs.rejected_classes = {1, 9};
  cfg.walks.dedupe_walks = true;
  cfg.eval.t_c_sweep = {0.25, 1.0, 2.0};
  const std::string text = serialize_config(cfg);
  const PipelineConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("unknown keys are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config("[blobs]\nmin_blob_sizes = 3\n"),
                       doctest::Contains("blobs.min_blob_sizes"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[nosuch]\nx = 1\n"), doctest::Contains("nosuch.x"),
                       ConfigError);
}

TEST_CASE("invalid values are rejected with the field name") {
  CHECK_THROWS_WITH_AS(parse_config("[graph]\nmerge_distance = -1\n"),
                       doctest::Contains("graph.merge_distance"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[walks]\nnum_walks = 0\n"),
                       doctest::Contains("walks.num_walks"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[eval]\nt_c_sweep = [2, 1]\n"),
                       doctest::Contains("eval.t_c_sweep"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[graph]\nimage_space = maybe\n"),
                       doctest::Contains("graph.image_space"), ConfigError);
  CHECK_THROWS_AS(parse_config("[blobs]\nmin_blob_size\n"), ConfigError);
}

TEST_CASE("overrides apply on top of file values") {
  const std::string text = "[graph]\nmerge_distance = 9\n";
  const PipelineConfig cfg = parse_config(text, {"graph.merge_distance=12.5", "matching.k=3"});
  CHECK(cfg.graph.merge_distance == 12.5);
  CHECK(cfg.matching.k == 3);
  CHECK_THROWS_AS(parse_config(text, {"matching.k"}), ConfigError);
}

TEST_CASE("t_l auto default follows merge distance") {
  const PipelineConfig cfg = parse_config("[graph]\nmerge_distance = 15\n");
  CHECK(cfg.resolved_t_l() == 30.0);
  const PipelineConfig pinned = parse_config("[eval]\nt_l = 12\n");
  CHECK(pinned.resolved_t_l() == 12.0);
}

TEST_CASE("comments and blank lines are ignored") {
  const PipelineConfig cfg = parse_config(
      "# pipeline settings\n\n[matching]\nk = 7  # candidates per vertex\n");
  CHECK(cfg.matching.k == 7);
}

TEST_CASE("world spec parses, validates and round-trips") {
  const std::string text =
      "[world]\nextent = 250\nstreets = 3\nbuildings = 10\nrng_seed = 5\n"
      "[camera]\nfx = 200\nfy = 210\ncx = 80\ncy = 60\nwidth = 160\nheight = 120\n"
      "[trajectory]\nkind = rear\npath = [10, 60, 200, 60]\nstep = 2\nodom_sigma = 0.05\n";
  const WorldFileSpec spec = parse_world_spec(text);
  CHECK(spec.world.extent == 250.0);
  CHECK(spec.world.streets == 3);
  CHECK(spec.trajectory.kind == TrajectorySpec::Kind::Rear);
  REQUIRE(spec.trajectory.path.size() == 2);
  CHECK(spec.trajectory.path[1].x() == 200.0);
  CHECK(spec.noise.odom_sigma_translation == 0.05);

  const std::string canonical = serialize_world_spec(spec);
  CHECK(serialize_world_spec(parse_world_spec(canonical)) == canonical);
}

TEST_CASE("world spec errors carry the field name") {
  CHECK_THROWS_WITH_AS(parse_world_spec("[world]\nextent = -5\n"),
                       doctest::Contains("world.extent"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_world_spec("[trajectory]\nkind = sideways\n"),
                       doctest::Contains("trajectory.kind"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_world_spec("[trajectory]\npath = [1, 2, 3]\n"),
                       doctest::Contains("trajectory.path"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_world_spec("[world]\nbuildings = -1\n"),
                       doctest::Contains("world.buildings"), ConfigError);
}
