// Command-line entry point: dataset generation, graph building, localization
// and evaluation, all driven by one config file. Exit codes: 0 success,
// 2 config/usage error, 3 I/O or data error.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semloc/blobs.hpp"
#include "semloc/config.hpp"
#include "semloc/errors.hpp"
#include "semloc/eval.hpp"
#include "semloc/frame_io.hpp"
#include "semloc/graph.hpp"
#include "semloc/io_util.hpp"
#include "semloc/sim.hpp"
#include "semloc/walks.hpp"

namespace {

namespace fs = std::filesystem;
using namespace semloc;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  long long seed = -1;
  int threads = 1;
};

PipelineConfig effective_config(const GlobalOptions& global) {
  std::vector<std::string> overrides = global.overrides;
  if (global.seed >= 0) {
    overrides.push_back("walks.rng_seed=" + std::to_string(global.seed));
    overrides.push_back("ransac.rng_seed=" + std::to_string(global.seed));
  }
  if (global.config_path.empty()) {
    PipelineConfig cfg = parse_config("", overrides);
    return cfg;
  }
  return load_config(global.config_path, overrides);
}

void echo_config(const PipelineConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file_atomic(dir / "effective_config.txt", serialize_config(cfg));
}

int cmd_gen_world(const GlobalOptions& global, const std::string& spec_path,
                  const std::string& out_dir) {
  std::vector<std::string> overrides = global.overrides;
  if (global.seed >= 0) {
    overrides.push_back("world.rng_seed=" + std::to_string(global.seed));
    overrides.push_back("trajectory.noise_seed=" + std::to_string(global.seed));
  }
  const WorldFileSpec spec = load_world_spec(spec_path, overrides);
  const World world = generate_world(spec.world);
  fs::create_directories(out_dir);
  simulate_dataset(world, spec.trajectory, spec.camera, spec.noise, out_dir, global.threads);
  write_text_file_atomic(fs::path(out_dir) / "effective_spec.txt", serialize_world_spec(spec));
  return 0;
}

int cmd_build_graph(const GlobalOptions& global, const std::string& dataset_dir,
                    const std::string& out_graph) {
  const PipelineConfig cfg = effective_config(global);
  const CameraIntrinsics cam = load_camera(dataset_dir);
  const int frames = count_frames(dataset_dir);
  const int min_size = effective_min_blob_size(cfg.blobs.min_blob_size, cam);

  WindowedGraphBuilder builder(0, cfg.graph.merge_distance, cfg.graph.edge_distance);
  for (int i = 0; i < frames; ++i) {
    SemanticFrame frame = load_frame(dataset_dir, i);
    frame.labels = smooth_labels(frame.labels, cfg.blobs.smoothing_radius);
    const BlobExtraction extraction = extract_blobs(frame, min_size, cfg.blobs.rejected_classes);
    const SemanticGraph frame_graph =
        cfg.graph.image_space
            ? build_image_space_graph(extraction.blobs, cfg.graph.pixel_edge_distance,
                                      frame.odom_pose, i)
            : build_frame_graph(extraction.blobs, cfg.graph.edge_distance, frame.odom_pose, i);
    builder.push_frame(frame_graph);
  }

  const fs::path out_path(out_graph);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  if (cfg.store_descriptors) {
    const DescriptorMap descriptors = describe_graph(builder.graph(), cfg.walks, global.threads);
    const auto rows = rows_from_descriptors(descriptors);
    save_graph(out_path, builder.graph(), &rows);
  } else {
    save_graph(out_path, builder.graph());
  }
  echo_config(cfg, out_path.has_parent_path() ? out_path.parent_path() : fs::path("."));
  return 0;
}

int cmd_localize(const GlobalOptions& global, const std::string& query_dataset,
                 const std::string& db_graph_path, const std::string& out_csv) {
  const PipelineConfig cfg = effective_config(global);

  std::map<VertexId, std::vector<std::vector<ClassId>>> stored_rows;
  const SemanticGraph db = load_graph(db_graph_path, &stored_rows);
  DescriptorMap db_desc;
  if (!stored_rows.empty()) {
    try {
      db_desc = descriptors_from_rows(db, stored_rows);
    } catch (const Error& e) {
      throw IoError(std::string(e.what()) + " [" + db_graph_path + "]");
    }
  } else {
    db_desc = describe_graph(db, cfg.walks, global.threads);
  }

  const std::vector<TrialRecord> records =
      run_sequence(query_dataset, db, db_desc, cfg, global.threads);

  const fs::path out_path(out_csv);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_trials(out_path, records);
  echo_config(cfg, out_path.has_parent_path() ? out_path.parent_path() : fs::path("."));
  return 0;
}

int cmd_eval(const GlobalOptions& global, const std::string& trials_path,
             const std::string& out_dir) {
  const PipelineConfig cfg = effective_config(global);
  const std::vector<TrialRecord> records = load_trials(trials_path);

  EvalThresholds thresholds;
  thresholds.t_l = cfg.resolved_t_l();
  thresholds.t_c_sweep = cfg.eval.t_c_sweep;

  const auto pr = pr_curve(records, thresholds);
  const auto success =
      success_rate_curve(records, cfg.eval.success_max_distance, cfg.eval.success_bins);

  fs::create_directories(out_dir);
  write_text_file_atomic(fs::path(out_dir) / "pr.csv", pr_to_csv(pr));
  write_text_file_atomic(fs::path(out_dir) / "success.csv", success_to_csv(success));
  echo_config(cfg, out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-graph global localization pipeline"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config_path, "Pipeline config file (TOML-style)");
  app.add_option("--set", global.overrides, "Override a config entry: section.key=value");
  app.add_option("--seed", global.seed, "Override every RNG seed in the config");
  app.add_option("--threads", global.threads, "Worker threads for rendering and descriptors")
      ->check(CLI::PositiveNumber);

  std::string arg1, arg2, arg3;

  CLI::App* gen = app.add_subcommand("gen-world", "Generate a synthetic dataset from a world spec");
  gen->add_option("spec", arg1, "World spec file")->required();
  gen->add_option("out_dir", arg2, "Output dataset directory")->required();

  CLI::App* build = app.add_subcommand("build-graph", "Build a database graph from a dataset");
  build->add_option("dataset", arg1, "Dataset directory")->required();
  build->add_option("out_graph", arg2, "Output graph JSON path")->required();

  CLI::App* localize = app.add_subcommand("localize", "Localize a query dataset in a database graph");
  localize->add_option("query_dataset", arg1, "Query dataset directory")->required();
  localize->add_option("db_graph", arg2, "Database graph JSON")->required();
  localize->add_option("out_csv", arg3, "Output trials CSV path")->required();

  CLI::App* evaluate = app.add_subcommand("eval", "Compute PR and success curves from trials");
  evaluate->add_option("trials", arg1, "Trials CSV from localize")->required();
  evaluate->add_option("out_dir", arg2, "Output directory for pr.csv and success.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_world(global, arg1, arg2);
    if (build->parsed()) return cmd_build_graph(global, arg1, arg2);
    if (localize->parsed()) return cmd_localize(global, arg1, arg2, arg3);
    if (evaluate->parsed()) return cmd_eval(global, arg1, arg2);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
