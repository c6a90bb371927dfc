#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "semloc/backend.hpp"
#include "semloc/sim.hpp"
#include "semloc/walks.hpp"

namespace semloc {

/// Every pipeline tunable, grouped per stage. Files use "key = value" lines
/// under [section] headers; unknown keys are rejected.
struct PipelineConfig {
  struct Blobs {
    int min_blob_size = 200;  // at 640x480, scaled by pixel count elsewhere
    int smoothing_radius = 4;
    std::set<ClassId> rejected_classes;  // class 0 is always rejected
  } blobs;

  struct Graph {
    double merge_distance = 10.0;
    double edge_distance = 15.0;
    int query_frames = 5;  // F
    bool image_space = false;
    double pixel_edge_distance = 100.0;
  } graph;

  WalkParams walks;
  bool store_descriptors = true;

  struct Matching {
    int k = 5;
  } matching;

  struct Ransac {
    double t_c = 10.0;  // run-time consistency threshold, meters
    int iterations = 500;
    std::uint64_t rng_seed = 99;
  } ransac;

  struct Backend {
    BackendWeights weights;
    int max_iterations = 50;
    double tolerance = 1e-9;
  } backend;

  struct Eval {
    double t_l = 0.0;  // 0: auto, 2 x merge_distance
    std::vector<double> t_c_sweep;
    double success_max_distance = 50.0;
    int success_bins = 50;
  } eval;

  /// t_l with the auto default resolved.
  double resolved_t_l() const { return eval.t_l > 0.0 ? eval.t_l : 2.0 * graph.merge_distance; }

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

PipelineConfig default_config();

/// Parse config text; `overrides` are "section.key=value" strings applied on
/// top (the CLI's --set and --seed plumbing).
PipelineConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

/// Canonical serialization with all defaults applied; parsing it back yields
/// an equal config.
std::string serialize_config(const PipelineConfig& config);

/// World + trajectory + sensor description consumed by gen-world.
struct WorldFileSpec {
  WorldSpec world;
  CameraIntrinsics camera{300.0, 300.0, 200.0, 150.0, 400, 300};
  TrajectorySpec trajectory;
  SensorNoise noise;

  void validate() const;
};

WorldFileSpec parse_world_spec(const std::string& text,
                               const std::vector<std::string>& overrides = {});
WorldFileSpec load_world_spec(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {});
std::string serialize_world_spec(const WorldFileSpec& spec);

}  // namespace semloc
