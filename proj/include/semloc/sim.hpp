#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semloc/frame.hpp"
#include "semloc/geometry.hpp"
#include "semloc/types.hpp"

namespace semloc {

/// Class ids used by the synthetic world.
namespace world_class {
constexpr ClassId kGround = 1;
constexpr ClassId kStreet = 2;
constexpr ClassId kBuilding = 3;
constexpr ClassId kTree = 4;
constexpr ClassId kCar = 5;
constexpr ClassId kFence = 6;
constexpr ClassId kSign = 7;
}  // namespace world_class

struct WorldSpec {
  double extent = 400.0;  // world covers [0, extent] x [0, extent], z up
  int streets = 6;
  int buildings = 20;
  int trees = 12;
  int cars = 10;
  int fences = 8;
  int signs = 6;
  std::uint64_t rng_seed = 1;
};

struct Box {
  Vec3d min_corner = Vec3d::Zero();
  Vec3d max_corner = Vec3d::Zero();
  ClassId class_id = 0;
  int object_id = 0;  // unique, 1-based; 0 is reserved for "no object"

  Vec3d center() const { return 0.5 * (min_corner + max_corner); }
};

struct World {
  double extent = 0.0;
  std::vector<Box> objects;  // ascending object_id; ground plane box first

  /// Axis positions (y for horizontal, x for vertical) of the street lanes,
  /// useful for laying trajectories along streets.
  std::vector<double> horizontal_street_ys;
  std::vector<double> vertical_street_xs;
};

/// Deterministic placement from rng_seed: streets form a grid, buildings,
/// fences and signs flank them, cars sit on them, trees scatter. Same-class
/// object centers keep a minimum separation of 2 m; if the extent cannot
/// accommodate the requested counts a "placement failure" error is raised.
World generate_world(const WorldSpec& spec);

struct TrajectorySpec {
  enum class Kind { Forward, Rear, Aerial };
  Kind kind = Kind::Forward;
  std::vector<Vec2d> path;  // polyline in the ground plane, meters
  double step = 1.0;        // distance between frames
  double height = -1.0;     // <0: default per kind (1.5 m ground, 40 m aerial)
  double pitch_deg = -1.0;  // <0: default per kind (12 down ground, 90 aerial)
};

struct SensorNoise {
  double odom_sigma_translation = 0.0;  // per-step drift, meters
  double odom_sigma_rotation_deg = 0.0;
  double label_flip_rate = 0.0;  // per-pixel probability of a wrong class
  std::uint64_t rng_seed = 7;
};

/// Ground-truth camera poses along the trajectory, one per `step` meters.
std::vector<Posed> trajectory_poses(const TrajectorySpec& traj);

/// Camera orientation for a ground robot heading `yaw` (about world z) with
/// the optical axis pitched down by `pitch_deg`.
Quatd camera_orientation(double yaw, double pitch_deg);

/// Z-buffer render: each pixel takes the class and object id of the nearest
/// box hit by its ray, depth is the Euclidean hit distance in meters; no hit
/// leaves class 0 and depth 0. Exact (unquantized) depths.
SemanticFrame render_frame(const World& world, const Posed& pose, const CameraIntrinsics& cam);

struct SimulatedDataset {
  int frame_count = 0;
  std::vector<Posed> gt_poses;
  std::vector<Posed> odom_poses;
};

/// Renders the trajectory into the on-disk dataset layout. pose.txt carries
/// odometry integrated from noisy relative motions; gt_poses.txt carries the
/// true poses. Depth grids are quantized to integer millimeters before
/// writing so a reload reproduces the files bit for bit.
SimulatedDataset simulate_dataset(const World& world, const TrajectorySpec& traj,
                                  const CameraIntrinsics& cam, const SensorNoise& noise,
                                  const std::filesystem::path& out_root, int threads = 1);

}  // namespace semloc
