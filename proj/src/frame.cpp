#include "semloc/frame.hpp"

#include <string>

#include "semloc/errors.hpp"

namespace semloc {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("camera: focal lengths must be positive");
  if (width < 1 || height < 1) throw ConfigError("camera: grid dimensions must be positive");
  if (!(cx >= 0.0 && cx < width)) throw ConfigError("camera: cx outside [0, width)");
  if (!(cy >= 0.0 && cy < height)) throw ConfigError("camera: cy outside [0, height)");
}

Vec3d back_project(const SemanticFrame& frame, int u, int v, double distance) {
  if (!(distance > 0.0)) {
    throw NoDepthError("no-depth: invalid depth at pixel (" + std::to_string(u) + ", " +
                       std::to_string(v) + ")");
  }
  return frame.odom_pose * (distance * frame.intrinsics.ray(u, v));
}

Vec3d back_project(const SemanticFrame& frame, int u, int v) {
  if (u < 0 || v < 0 || u >= frame.width() || v >= frame.height()) {
    throw Error("back_project: pixel outside grid");
  }
  return back_project(frame, u, v, frame.depth(v, u));
}

}  // namespace semloc
