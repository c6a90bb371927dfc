#pragma once

#include <optional>

#include "semloc/geometry.hpp"
#include "semloc/types.hpp"

namespace semloc {

/// Pinhole camera parameters. The camera looks along +z of its local frame,
/// +x right, +y down.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  /// Unit-length viewing ray of pixel (u, v) in the camera frame.
  Vec3d ray(double u, double v) const {
    return Vec3d((u - cx) / fx, (v - cy) / fy, 1.0).normalized();
  }
};

/// One time-stamped observation: label grid, optional instance grid, depth
/// grid (meters, 0 = invalid), odometry pose of the camera and intrinsics.
/// Immutable after construction and safe to share across threads.
struct SemanticFrame {
  CameraIntrinsics intrinsics;
  LabelGrid labels;
  std::optional<LabelGrid> instances;
  DepthGrid depth;  // Euclidean distance along the pixel ray, meters
  Posed odom_pose;
  int timestamp = 0;

  int width() const { return static_cast<int>(labels.cols()); }
  int height() const { return static_cast<int>(labels.rows()); }
};

/// Lift pixel (u, v) to a 3D point in the odometry frame using the stored
/// ray distance. Throws NoDepthError when depth(v, u) is invalid (zero).
Vec3d back_project(const SemanticFrame& frame, int u, int v);

/// Same, but with an explicit distance (used for blob median-depth fallback).
Vec3d back_project(const SemanticFrame& frame, int u, int v, double distance);

}  // namespace semloc
