#pragma once

#include <filesystem>
#include <vector>

#include "semloc/frame.hpp"

namespace semloc {

/// On-disk dataset layout:
///   <root>/camera.txt                      "fx fy cx cy width height"
///   <root>/frames/NNNNNN/labels.pgm        16-bit binary PGM, pixel = class id
///   <root>/frames/NNNNNN/depth.pgm         16-bit binary PGM, millimeters (0 = invalid)
///   <root>/frames/NNNNNN/instances.pgm     optional, 16-bit binary PGM
///   <root>/frames/NNNNNN/pose.txt          "tx ty tz qx qy qz qw"
///   <root>/gt_poses.txt                    optional, one pose line per frame
/// All text files are ASCII and newline-terminated. NNNNNN is the zero-padded
/// 6-digit frame index. Depth is stored in integer millimeters, so frames
/// written by write_frame round depth to the nearest millimeter.

std::filesystem::path frame_dir(const std::filesystem::path& dataset_root, int index);

CameraIntrinsics load_camera(const std::filesystem::path& dataset_root);
void write_camera(const std::filesystem::path& dataset_root, const CameraIntrinsics& cam);

/// Parse one "tx ty tz qx qy qz qw" line. Quaternions within 1e-3 of unit
/// norm are normalized; anything further off is an error.
Posed parse_pose_line(const std::string& line, const std::string& context);
std::string format_pose_line(const Posed& pose);

LabelGrid load_pgm16(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const LabelGrid& grid);

SemanticFrame load_frame(const std::filesystem::path& dataset_root, int index);
void write_frame(const std::filesystem::path& dataset_root, int index, const SemanticFrame& frame);

/// Number of consecutive frame directories starting at index 0.
int count_frames(const std::filesystem::path& dataset_root);

std::vector<Posed> load_pose_file(const std::filesystem::path& path);
void write_pose_file(const std::filesystem::path& path, const std::vector<Posed>& poses);

/// Depth grids persist as integer millimeters; values above 65.535 m do not
/// fit and become invalid (0). Applied by the dataset writer.
DepthGrid quantize_depth_mm(const DepthGrid& depth);

}  // namespace semloc
