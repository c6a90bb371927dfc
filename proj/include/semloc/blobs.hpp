#pragma once

#include <optional>
#include <set>
#include <vector>

#include "semloc/frame.hpp"
#include "semloc/types.hpp"

namespace semloc {

/// A maximal 4-connected region of pixels sharing one class (and instance id
/// when an instance grid is present).
struct Blob {
  ClassId class_id = 0;
  std::optional<int> instance_id;
  std::vector<int> pixel_u;  // parallel arrays, scanline order
  std::vector<int> pixel_v;
  Eigen::Vector2i center_px = Eigen::Vector2i::Zero();  // (u, v), rounded centroid
  Vec3d center_3d = Vec3d::Zero();                      // odometry frame

  size_t size() const { return pixel_u.size(); }
};

/// Per-class morphological closing (dilate then erode) with a square
/// structuring element of half-width `radius`. Windows are clipped at the
/// grid border, which keeps the closing extensive and idempotent. Classes are
/// processed in ascending id; on contested pixels the highest class wins.
/// Class 0 is void and is never smoothed. Radius 0 is the identity.
LabelGrid smooth_labels(const LabelGrid& labels, int radius);

/// Connected-component blob extraction over (class, instance) with
/// 4-connectivity. Components with class 0, class in rejected_classes or
/// fewer than min_blob_size pixels are dropped. The 3D center comes from
/// back-projecting the rounded pixel centroid; when that pixel has no valid
/// depth, the median of the blob's valid depths is used, and a blob with no
/// valid depth at all is dropped (counted in dropped_no_depth).
struct BlobExtraction {
  std::vector<Blob> blobs;
  int dropped_no_depth = 0;
};
BlobExtraction extract_blobs(const SemanticFrame& frame, int min_blob_size,
                             const std::set<ClassId>& rejected_classes);

/// min_blob_size is specified at 640x480 and scaled by pixel count elsewhere.
int effective_min_blob_size(int reference_min_size, const CameraIntrinsics& cam);

}  // namespace semloc
