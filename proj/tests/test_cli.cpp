#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "proc_util.hpp"
#include "semloc/config.hpp"
#include "semloc/eval.hpp"
#include "semloc/graph.hpp"
#include "semloc/io_util.hpp"

using namespace semloc;
using namespace semloc::testutil;

namespace {

const std::string cli = SEMLOC_CLI_PATH;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string small_world_spec(int seed = 5, const std::string& kind = "forward",
                             double odom_sigma = 0.0) {
  return "[world]\nextent = 140\nstreets = 2\nbuildings = 8\ntrees = 5\ncars = 4\n"
         "fences = 4\nsigns = 3\nrng_seed = " +
         std::to_string(seed) +
         "\n[camera]\nfx = 90\nfy = 90\ncx = 60\ncy = 45\nwidth = 120\nheight = 90\n"
         "[trajectory]\nkind = " +
         kind +
         "\npath = [15, 46.7, 115, 46.7]\nstep = 2.5\nodom_sigma = " +
         format_double(odom_sigma) + "\n";
}

std::string small_config() {
  return "[graph]\nmerge_distance = 8\nedge_distance = 14\n"
         "[blobs]\nrejected_classes = [1]\n"
         "[walks]\nnum_walks = 100\nwalk_depth = 3\n";
}

}  // namespace

TEST_CASE("gen-world writes a dataset and is byte-deterministic") {
  TempDir tmp("semloc_cli_gen");
  write_file(tmp.path / "world.cfg", small_world_spec());
  const std::string out_a = (tmp.path / "ds_a").string();
  const std::string out_b = (tmp.path / "ds_b").string();
  CHECK(run_command(cli + " gen-world " + (tmp.path / "world.cfg").string() + " " + out_a) == 0);
  CHECK(fs::exists(fs::path(out_a) / "frames" / "000000" / "labels.pgm"));
  CHECK(fs::exists(fs::path(out_a) / "gt_poses.txt"));
  CHECK(fs::exists(fs::path(out_a) / "camera.txt"));

  CHECK(run_command(cli + " gen-world " + (tmp.path / "world.cfg").string() + " " + out_b) == 0);
  CHECK(hash_directory(out_a) == hash_directory(out_b));
}

TEST_CASE("gen-world rejects an invalid spec field with exit 2") {
  TempDir tmp("semloc_cli_genbad");
  write_file(tmp.path / "bad.cfg", "[world]\nextent = -10\n");
  std::string err;
  CHECK(run_command(cli + " gen-world " + (tmp.path / "bad.cfg").string() + " " +
                        (tmp.path / "out").string(),
                    &err) == 2);
  CHECK(err.find("world.extent") != std::string::npos);

  write_file(tmp.path / "unknown.cfg", "[world]\nnot_a_field = 1\n");
  CHECK(run_command(cli + " gen-world " + (tmp.path / "unknown.cfg").string() + " " +
                        (tmp.path / "out").string(),
                    &err) == 2);
  CHECK(err.find("world.not_a_field") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run_command(cli + " no-such-command") == 2);
  CHECK(run_command(cli + " build-graph") == 2);
  CHECK(run_command(cli + " --help") == 0);
}

TEST_CASE("build-graph: empty dataset gives an empty graph, missing dataset exits 3") {
  TempDir tmp("semloc_cli_bg");
  // Dataset with a camera but zero frames.
  write_file(tmp.path / "camera.txt", "90 90 60 45 120 90\n");
  const std::string graph_path = (tmp.path / "db.json").string();
  CHECK(run_command(cli + " build-graph " + tmp.path.string() + " " + graph_path) == 0);
  const SemanticGraph g = load_graph(graph_path);
  CHECK(g.vertices.empty());
  CHECK(g.edges.empty());

  CHECK(run_command(cli + " build-graph " + (tmp.path / "nowhere").string() + " " +
                    (tmp.path / "x.json").string()) == 3);
}

TEST_CASE("full pipeline: build, localize, eval, all deterministic") {
  TempDir tmp("semloc_cli_full");
  write_file(tmp.path / "world.cfg", small_world_spec());
  write_file(tmp.path / "pipeline.cfg", small_config());
  const std::string ds = (tmp.path / "ds").string();
  const std::string cfg = " --config " + (tmp.path / "pipeline.cfg").string();
  REQUIRE(run_command(cli + " gen-world " + (tmp.path / "world.cfg").string() + " " + ds) == 0);

  const std::string db_a = (tmp.path / "a" / "db.json").string();
  const std::string db_b = (tmp.path / "b" / "db.json").string();
  REQUIRE(run_command(cli + cfg + " build-graph " + ds + " " + db_a) == 0);
  REQUIRE(run_command(cli + cfg + " build-graph " + ds + " " + db_b) == 0);
  CHECK(read_file(db_a) == read_file(db_b));  // byte-identical rebuild

  // The echoed effective config re-parses to the same bytes.
  const std::string echoed = read_file(tmp.path / "a" / "effective_config.txt");
  CHECK(serialize_config(parse_config(echoed)) == echoed);

  const std::string trials_a = (tmp.path / "a" / "trials.csv").string();
  const std::string trials_b = (tmp.path / "b" / "trials.csv").string();
  REQUIRE(run_command(cli + cfg + " localize " + ds + " " + db_a + " " + trials_a) == 0);
  REQUIRE(run_command(cli + cfg + " localize " + ds + " " + db_a + " " + trials_b) == 0);
  CHECK(read_file(trials_a) == read_file(trials_b));

  // Self-localization: nearly every window lands within t_L.
  const auto records = load_trials(trials_a);
  REQUIRE(!records.empty());
  int good = 0;
  for (const auto& r : records) {
    if (r.attempted && r.position_error() <= 16.0) ++good;
  }
  CHECK(static_cast<double>(good) / records.size() >= 0.95);

  const std::string eval_a = (tmp.path / "a" / "eval").string();
  const std::string eval_b = (tmp.path / "b" / "eval").string();
  REQUIRE(run_command(cli + cfg + " eval " + trials_a + " " + eval_a) == 0);
  REQUIRE(run_command(cli + cfg + " eval " + trials_a + " " + eval_b) == 0);
  CHECK(fs::exists(fs::path(eval_a) / "pr.csv"));
  CHECK(fs::exists(fs::path(eval_a) / "success.csv"));
  CHECK(hash_directory(eval_a) == hash_directory(eval_b));

  // eval output equals the library computation on the same records.
  PipelineConfig config = parse_config(small_config());
  EvalThresholds thresholds;
  thresholds.t_l = config.resolved_t_l();
  thresholds.t_c_sweep = config.eval.t_c_sweep;
  CHECK(read_file(fs::path(eval_a) / "pr.csv") == pr_to_csv(pr_curve(records, thresholds)));
  CHECK(read_file(fs::path(eval_a) / "success.csv") ==
        success_to_csv(success_rate_curve(records, config.eval.success_max_distance,
                                          config.eval.success_bins)));
}

TEST_CASE("localize with a corrupt graph exits 3 and names the file") {
  TempDir tmp("semloc_cli_corrupt");
  write_file(tmp.path / "world.cfg", small_world_spec());
  const std::string ds = (tmp.path / "ds").string();
  REQUIRE(run_command(cli + " gen-world " + (tmp.path / "world.cfg").string() + " " + ds) == 0);
  write_file(tmp.path / "broken.json", "{\"vertices\": [");
  std::string err;
  CHECK(run_command(cli + " localize " + ds + " " + (tmp.path / "broken.json").string() + " " +
                        (tmp.path / "t.csv").string(),
                    &err) == 3);
  CHECK(err.find("broken.json") != std::string::npos);
}

TEST_CASE("eval on empty or malformed trials exits 2") {
  TempDir tmp("semloc_cli_eval");
  write_file(tmp.path / "empty.csv", "");
  CHECK(run_command(cli + " eval " + (tmp.path / "empty.csv").string() + " " +
                    (tmp.path / "out").string()) == 2);
  write_file(tmp.path / "header_only.csv", trials_to_csv({}));
  CHECK(run_command(cli + " eval " + (tmp.path / "header_only.csv").string() + " " +
                    (tmp.path / "out").string()) == 2);
  write_file(tmp.path / "garbage.csv", "a,b\n1,2\n");
  CHECK(run_command(cli + " eval " + (tmp.path / "garbage.csv").string() + " " +
                    (tmp.path / "out").string()) == 2);
}

TEST_CASE("building-class vertex count tracks the generator ground truth") {
  TempDir tmp("semloc_cli_buildings");
  // 12 buildings flanking a single street; the path runs the street's length.
  write_file(tmp.path / "world.cfg",
             "[world]\nextent = 160\nstreets = 1\nbuildings = 12\ntrees = 0\ncars = 0\n"
             "fences = 0\nsigns = 0\nrng_seed = 11\n"
             "[camera]\nfx = 90\nfy = 90\ncx = 60\ncy = 45\nwidth = 120\nheight = 90\n"
             "[trajectory]\nkind = forward\npath = [10, 80, 150, 80]\nstep = 2\n");
  write_file(tmp.path / "pipeline.cfg", small_config());
  const std::string ds = (tmp.path / "ds").string();
  REQUIRE(run_command(cli + " gen-world " + (tmp.path / "world.cfg").string() + " " + ds) == 0);
  const std::string db = (tmp.path / "db.json").string();
  REQUIRE(run_command(cli + " --config " + (tmp.path / "pipeline.cfg").string() +
                      " build-graph " + ds + " " + db) == 0);
  const SemanticGraph g = load_graph(db);
  int buildings = 0;
  for (const auto& [id, v] : g.vertices) {
    if (v.class_id == world_class::kBuilding) ++buildings;
  }
  CHECK(buildings >= 10);  // 12 +- 20%
  CHECK(buildings <= 14);
}

TEST_CASE("--seed overrides the config seeds") {
  TempDir tmp("semloc_cli_seed");
  write_file(tmp.path / "world.cfg", small_world_spec(5, "forward", 0.05));
  const std::string a = (tmp.path / "a").string();
  const std::string b = (tmp.path / "b").string();
  const std::string c = (tmp.path / "c").string();
  REQUIRE(run_command(cli + " --seed 100 gen-world " + (tmp.path / "world.cfg").string() + " " +
                      a) == 0);
  REQUIRE(run_command(cli + " --seed 100 gen-world " + (tmp.path / "world.cfg").string() + " " +
                      b) == 0);
  REQUIRE(run_command(cli + " --seed 101 gen-world " + (tmp.path / "world.cfg").string() + " " +
                      c) == 0);
  CHECK(hash_directory(a) == hash_directory(b));
  CHECK(hash_directory(a) != hash_directory(c));
}
