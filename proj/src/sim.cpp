#include "semloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "semloc/errors.hpp"
#include "semloc/frame_io.hpp"
#include "semloc/rng.hpp"

namespace semloc {
namespace {

constexpr double kStreetHalfWidth = 4.0;
constexpr double kStreetTop = 0.05;
constexpr double kMinSameClassSeparation = 2.0;
constexpr int kPlacementAttempts = 200;

struct StreetLane {
  bool horizontal = false;
  double axis = 0.0;  // y for horizontal lanes, x for vertical ones
  double lo = 0.0;    // lane extent along its direction
  double hi = 0.0;
};

Box lane_box(const StreetLane& lane) {
  Box b;
  b.class_id = world_class::kStreet;
  if (lane.horizontal) {
    b.min_corner = Vec3d(lane.lo, lane.axis - kStreetHalfWidth, 0.0);
    b.max_corner = Vec3d(lane.hi, lane.axis + kStreetHalfWidth, kStreetTop);
  } else {
    b.min_corner = Vec3d(lane.axis - kStreetHalfWidth, lane.lo, 0.0);
    b.max_corner = Vec3d(lane.axis + kStreetHalfWidth, lane.hi, kStreetTop);
  }
  return b;
}

bool inside_extent(const Box& b, double extent) {
  return b.min_corner.x() >= 0.0 && b.min_corner.y() >= 0.0 && b.max_corner.x() <= extent &&
         b.max_corner.y() <= extent;
}

bool separated(const std::vector<Box>& objects, const Box& candidate) {
  for (const Box& other : objects) {
    if (other.class_id != candidate.class_id) continue;
    if ((other.center() - candidate.center()).norm() < kMinSameClassSeparation) return false;
  }
  return true;
}

}  // namespace

World generate_world(const WorldSpec& spec) {
  if (!(spec.extent > 0.0)) throw ConfigError("world.extent must be positive");
  for (const int count : {spec.streets, spec.buildings, spec.trees, spec.cars, spec.fences,
                          spec.signs}) {
    if (count < 0) throw ConfigError("world object counts must be non-negative");
  }

  World world;
  world.extent = spec.extent;
  int next_id = 1;

  Box ground;
  ground.class_id = world_class::kGround;
  ground.object_id = next_id++;
  ground.min_corner = Vec3d(0.0, 0.0, -1.0);
  ground.max_corner = Vec3d(spec.extent, spec.extent, 0.0);
  world.objects.push_back(ground);

  // Streets form a deterministic grid: horizontal lanes at even fractions,
  // vertical lanes offset so no two lane centers coincide.
  std::vector<StreetLane> lanes;
  const int n_h = (spec.streets + 1) / 2;
  const int n_v = spec.streets / 2;
  for (int j = 0; j < n_h; ++j) {
    StreetLane lane;
    lane.horizontal = true;
    lane.axis = spec.extent * (j + 1) / (n_h + 1);
    lane.lo = 0.05 * spec.extent;
    lane.hi = 0.95 * spec.extent;
    lanes.push_back(lane);
    world.horizontal_street_ys.push_back(lane.axis);
  }
  for (int j = 0; j < n_v; ++j) {
    StreetLane lane;
    lane.horizontal = false;
    lane.axis = spec.extent * (j + 0.7) / (n_v + 1);
    lane.lo = 0.05 * spec.extent;
    lane.hi = 0.95 * spec.extent;
    lanes.push_back(lane);
    world.vertical_street_xs.push_back(lane.axis);
  }
  for (const StreetLane& lane : lanes) {
    Box b = lane_box(lane);
    b.object_id = next_id++;
    if (!inside_extent(b, spec.extent) || !separated(world.objects, b)) {
      throw ConfigError("placement failure: street grid does not fit the extent");
    }
    world.objects.push_back(b);
  }

  Rng rng(mix_seed(spec.rng_seed, 0xb0b5ULL));

  // Boxes flanking a random lane at the given lateral distance band.
  const auto flanked_box = [&](double offset_lo, double offset_hi, double len_lo, double len_hi,
                               double width_lo, double width_hi, double height_lo,
                               double height_hi) {
    Box b;
    const StreetLane& lane = lanes[rng.uniform_index(lanes.size())];
    const double along = rng.uniform(lane.lo, lane.hi);
    const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double length = rng.uniform(len_lo, len_hi);
    const double width = rng.uniform(width_lo, width_hi);
    const double height = rng.uniform(height_lo, height_hi);
    const double lateral =
        lane.axis + side * (kStreetHalfWidth + rng.uniform(offset_lo, offset_hi) + 0.5 * width);
    Vec3d center;
    if (lane.horizontal) {
      center = Vec3d(along, lateral, 0.0);
      b.min_corner = Vec3d(center.x() - 0.5 * length, center.y() - 0.5 * width, 0.0);
      b.max_corner = Vec3d(center.x() + 0.5 * length, center.y() + 0.5 * width, height);
    } else {
      center = Vec3d(lateral, along, 0.0);
      b.min_corner = Vec3d(center.x() - 0.5 * width, center.y() - 0.5 * length, 0.0);
      b.max_corner = Vec3d(center.x() + 0.5 * width, center.y() + 0.5 * length, height);
    }
    return b;
  };

  const auto scattered_box = [&](double side_lo, double side_hi, double height_lo,
                                 double height_hi) {
    Box b;
    const double sx = rng.uniform(side_lo, side_hi);
    const double sy = rng.uniform(side_lo, side_hi);
    const double height = rng.uniform(height_lo, height_hi);
    const double x = rng.uniform(2.0 + 0.5 * sx, spec.extent - 2.0 - 0.5 * sx);
    const double y = rng.uniform(2.0 + 0.5 * sy, spec.extent - 2.0 - 0.5 * sy);
    b.min_corner = Vec3d(x - 0.5 * sx, y - 0.5 * sy, 0.0);
    b.max_corner = Vec3d(x + 0.5 * sx, y + 0.5 * sy, height);
    return b;
  };

  const auto on_street_box = [&](double length, double width, double height) {
    Box b;
    const StreetLane& lane = lanes[rng.uniform_index(lanes.size())];
    const double along = rng.uniform(lane.lo, lane.hi);
    const double lateral = lane.axis + rng.uniform(-2.0, 2.0);
    if (lane.horizontal) {
      b.min_corner = Vec3d(along - 0.5 * length, lateral - 0.5 * width, kStreetTop);
      b.max_corner = Vec3d(along + 0.5 * length, lateral + 0.5 * width, kStreetTop + height);
    } else {
      b.min_corner = Vec3d(lateral - 0.5 * width, along - 0.5 * length, kStreetTop);
      b.max_corner = Vec3d(lateral + 0.5 * width, along + 0.5 * length, kStreetTop + height);
    }
    return b;
  };

  const auto place = [&](ClassId class_id, int count, auto&& make_box) {
    for (int i = 0; i < count; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        Box b = make_box();
        b.class_id = class_id;
        if (!inside_extent(b, spec.extent) || !separated(world.objects, b)) continue;
        b.object_id = next_id++;
        world.objects.push_back(b);
        placed = true;
        break;
      }
      if (!placed) {
        throw ConfigError("placement failure: could not place object of class " +
                          std::to_string(class_id));
      }
    }
  };

  const bool have_lanes = !lanes.empty();
  place(world_class::kBuilding, spec.buildings, [&] {
    return have_lanes ? flanked_box(2.0, 8.0, 8.0, 14.0, 8.0, 14.0, 5.0, 12.0)
                      : scattered_box(8.0, 14.0, 5.0, 12.0);
  });
  place(world_class::kFence, spec.fences, [&] {
    return have_lanes ? flanked_box(10.0, 16.0, 8.0, 20.0, 0.3, 0.4, 1.2, 1.8)
                      : scattered_box(4.0, 12.0, 1.2, 1.8);
  });
  place(world_class::kCar, spec.cars, [&] {
    return have_lanes ? on_street_box(4.5, 2.0, 1.6) : scattered_box(2.0, 4.5, 1.4, 1.8);
  });
  place(world_class::kSign, spec.signs, [&] {
    return have_lanes ? flanked_box(0.5, 1.5, 0.4, 0.4, 0.4, 0.4, 2.2, 2.8)
                      : scattered_box(0.4, 0.4, 2.2, 2.8);
  });
  place(world_class::kTree, spec.trees, [&] { return scattered_box(1.2, 2.0, 4.0, 8.0); });

  // Hard validation of the separation invariant over everything placed.
  for (size_t i = 0; i < world.objects.size(); ++i) {
    for (size_t j = i + 1; j < world.objects.size(); ++j) {
      const Box& a = world.objects[i];
      const Box& b = world.objects[j];
      if (a.class_id == b.class_id &&
          (a.center() - b.center()).norm() < kMinSameClassSeparation) {
        throw ConfigError("placement failure: same-class objects closer than 2 m");
      }
    }
  }
  return world;
}

Quatd camera_orientation(double yaw, double pitch_deg) {
  // Base: optical axis (+z cam) along +x world, +x cam right (-y world),
  // +y cam down (-z world). Pitch rotates the view downward.
  Mat3d base;
  base.col(0) = Vec3d(0.0, -1.0, 0.0);
  base.col(1) = Vec3d(0.0, 0.0, -1.0);
  base.col(2) = Vec3d(1.0, 0.0, 0.0);
  const double pitch = pitch_deg * M_PI / 180.0;
  const Mat3d rot = Eigen::AngleAxisd(yaw, Vec3d::UnitZ()).toRotationMatrix() *
                    Eigen::AngleAxisd(pitch, Vec3d::UnitY()).toRotationMatrix() * base;
  return Quatd(rot);
}

std::vector<Posed> trajectory_poses(const TrajectorySpec& traj) {
  if (traj.path.size() < 2) throw ConfigError("trajectory.path needs at least 2 waypoints");
  if (!(traj.step > 0.0)) throw ConfigError("trajectory.step must be positive");

  const bool aerial = traj.kind == TrajectorySpec::Kind::Aerial;
  const double height = traj.height >= 0.0 ? traj.height : (aerial ? 40.0 : 1.5);
  const double pitch = traj.pitch_deg >= 0.0 ? traj.pitch_deg : (aerial ? 90.0 : 12.0);
  const bool rear = traj.kind == TrajectorySpec::Kind::Rear;

  std::vector<double> seg_start{0.0};
  for (size_t i = 0; i + 1 < traj.path.size(); ++i) {
    seg_start.push_back(seg_start.back() + (traj.path[i + 1] - traj.path[i]).norm());
  }
  const double total = seg_start.back();

  std::vector<Posed> poses;
  size_t seg = 0;
  for (double s = 0.0; s <= total + 1e-9; s += traj.step) {
    const double clamped = std::min(s, total);
    while (seg + 2 < seg_start.size() && seg_start[seg + 1] < clamped) ++seg;
    const Vec2d a = traj.path[seg];
    const Vec2d b = traj.path[seg + 1];
    const double seg_len = (b - a).norm();
    if (seg_len <= 0.0) throw ConfigError("trajectory.path has a zero-length segment");
    const double frac = (clamped - seg_start[seg]) / seg_len;
    const Vec2d xy = a + frac * (b - a);
    const Vec2d dir = (b - a) / seg_len;
    const double yaw = std::atan2(dir.y(), dir.x()) + (rear ? M_PI : 0.0);
    poses.emplace_back(camera_orientation(yaw, pitch), Vec3d(xy.x(), xy.y(), height));
  }
  return poses;
}

namespace {

// Slab-method ray/box intersection. Returns the hit distance or +inf.
double ray_box_distance(const Vec3d& origin, const Vec3d& dir, const Box& box) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-12) {
      if (origin[a] < box.min_corner[a] || origin[a] > box.max_corner[a]) {
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    double t1 = (box.min_corner[a] - origin[a]) / dir[a];
    double t2 = (box.max_corner[a] - origin[a]) / dir[a];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far || t_far <= 0.0) return std::numeric_limits<double>::infinity();
  return t_near > 1e-9 ? t_near : t_far;  // inside the box: exit distance
}

}  // namespace

SemanticFrame render_frame(const World& world, const Posed& pose, const CameraIntrinsics& cam) {
  cam.validate();
  SemanticFrame frame;
  frame.intrinsics = cam;
  frame.odom_pose = pose;
  frame.labels = LabelGrid::Zero(cam.height, cam.width);
  frame.instances = LabelGrid::Zero(cam.height, cam.width);
  frame.depth = DepthGrid::Zero(cam.height, cam.width);

  const Vec3d origin = pose.translation;
  const Mat3d rot = pose.matrix();
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3d dir = rot * cam.ray(u, v);
      double best = std::numeric_limits<double>::infinity();
      const Box* hit = nullptr;
      for (const Box& box : world.objects) {
        const double t = ray_box_distance(origin, dir, box);
        if (t < best) {
          best = t;
          hit = &box;
        }
      }
      if (hit != nullptr) {
        frame.labels(v, u) = static_cast<std::uint16_t>(hit->class_id);
        (*frame.instances)(v, u) = static_cast<std::uint16_t>(hit->object_id);
        frame.depth(v, u) = best;
      }
    }
  }
  return frame;
}

SimulatedDataset simulate_dataset(const World& world, const TrajectorySpec& traj,
                                  const CameraIntrinsics& cam, const SensorNoise& noise,
                                  const std::filesystem::path& out_root, int threads) {
  SimulatedDataset out;
  out.gt_poses = trajectory_poses(traj);
  const int n = static_cast<int>(out.gt_poses.size());

  // Odometry drift: integrate per-step relative motions with Gaussian noise.
  Rng rng(mix_seed(noise.rng_seed, 0x0d0eULL));
  out.odom_poses.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      out.odom_poses.push_back(out.gt_poses[0]);
      continue;
    }
    Posed rel = out.gt_poses[i - 1].inverse() * out.gt_poses[i];
    if (noise.odom_sigma_translation > 0.0) {
      rel.translation += noise.odom_sigma_translation * Vec3d(rng.normal(), rng.normal(),
                                                              rng.normal());
    }
    if (noise.odom_sigma_rotation_deg > 0.0) {
      const double sigma = noise.odom_sigma_rotation_deg * M_PI / 180.0;
      const Vec3d w = sigma * Vec3d(rng.normal(), rng.normal(), rng.normal());
      rel.rotation = (rel.rotation * Quatd(exp_so3<double>(w))).normalized();
    }
    out.odom_poses.push_back(out.odom_poses.back() * rel);
  }

  write_camera(out_root, cam);

  const std::vector<ClassId> world_classes = {
      world_class::kGround, world_class::kStreet, world_class::kBuilding, world_class::kTree,
      world_class::kCar,    world_class::kFence,  world_class::kSign};

  const auto render_one = [&](int i) {
    SemanticFrame frame = render_frame(world, out.gt_poses[i], cam);
    frame.timestamp = i;
    frame.odom_pose = out.odom_poses[i];
    frame.depth = quantize_depth_mm(frame.depth);
    if (noise.label_flip_rate > 0.0) {
      for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
          Rng pixel_rng(mix_seed(noise.rng_seed,
                                 (static_cast<std::uint64_t>(i) << 40) ^
                                     (static_cast<std::uint64_t>(v) << 20) ^
                                     static_cast<std::uint64_t>(u)));
          if (pixel_rng.uniform() < noise.label_flip_rate) {
            const ClassId flipped =
                world_classes[pixel_rng.uniform_index(world_classes.size())];
            frame.labels(v, u) = static_cast<std::uint16_t>(flipped);
          }
        }
      }
    }
    write_frame(out_root, i, frame);
  };

  if (threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) render_one(i);
  } else {
    std::vector<std::thread> pool;
    const int n_threads = std::min(threads, n);
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < n; i += n_threads) render_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  write_pose_file(out_root / "gt_poses.txt", out.gt_poses);
  out.frame_count = n;
  return out;
}

}  // namespace semloc
