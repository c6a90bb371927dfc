#include "semloc/frame_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "semloc/io_util.hpp"

namespace semloc {
namespace {

std::string first_line(const std::string& text, const std::string& context) {
  const auto pos = text.find('\n');
  if (pos == std::string::npos) throw IoError("missing newline in " + context);
  return text.substr(0, pos);
}

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string next_pgm_token(const std::string& data, size_t& pos, const std::string& context) {
  while (pos < data.size()) {
    const char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  const size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  if (start == pos) throw IoError("truncated PGM header: " + context);
  return data.substr(start, pos - start);
}

}  // namespace

std::filesystem::path frame_dir(const std::filesystem::path& dataset_root, int index) {
  char name[16];
  std::snprintf(name, sizeof(name), "%06d", index);
  return dataset_root / "frames" / name;
}

LabelGrid load_pgm16(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  size_t pos = 0;
  const std::string ctx = path.string();
  const std::string magic = next_pgm_token(data, pos, ctx);
  if (magic != "P5") throw IoError("not a binary PGM (magic '" + magic + "'): " + ctx);
  const long long w = parse_int_token(next_pgm_token(data, pos, ctx), ctx);
  const long long h = parse_int_token(next_pgm_token(data, pos, ctx), ctx);
  const long long maxval = parse_int_token(next_pgm_token(data, pos, ctx), ctx);
  if (w < 1 || h < 1) throw IoError("bad PGM dimensions: " + ctx);
  if (maxval < 1 || maxval > 65535) throw IoError("bad PGM maxval: " + ctx);
  ++pos;  // single whitespace byte after maxval
  const int bytes = maxval > 255 ? 2 : 1;
  const size_t expected = static_cast<size_t>(w) * static_cast<size_t>(h) * bytes;
  if (data.size() - pos != expected) throw IoError("PGM payload size mismatch: " + ctx);

  LabelGrid grid(h, w);
  const auto* p = reinterpret_cast<const unsigned char*>(data.data()) + pos;
  for (long long v = 0; v < h; ++v) {
    for (long long u = 0; u < w; ++u) {
      if (bytes == 2) {
        grid(v, u) = static_cast<std::uint16_t>((p[0] << 8) | p[1]);  // big-endian
        p += 2;
      } else {
        grid(v, u) = *p++;
      }
    }
  }
  return grid;
}

void write_pgm16(const std::filesystem::path& path, const LabelGrid& grid) {
  std::string out = "P5\n" + std::to_string(grid.cols()) + " " + std::to_string(grid.rows()) +
                    "\n65535\n";
  out.reserve(out.size() + static_cast<size_t>(grid.size()) * 2);
  for (Eigen::Index v = 0; v < grid.rows(); ++v) {
    for (Eigen::Index u = 0; u < grid.cols(); ++u) {
      const std::uint16_t x = grid(v, u);
      out.push_back(static_cast<char>(x >> 8));
      out.push_back(static_cast<char>(x & 0xff));
    }
  }
  write_text_file_atomic(path, out);
}

Posed parse_pose_line(const std::string& line, const std::string& context) {
  const auto tok = split_tokens(line);
  if (tok.size() != 7) throw IoError("malformed pose line (expected 7 fields) in " + context);
  double f[7];
  for (int i = 0; i < 7; ++i) f[i] = parse_double_token(tok[i], context);
  Quatd q(f[6], f[3], f[4], f[5]);  // qw, qx, qy, qz
  const double norm = q.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-3) {
    throw IoError("non-unit quaternion (norm " + format_double(norm) + ") in " + context);
  }
  q.normalize();
  return Posed(q, Vec3d(f[0], f[1], f[2]));
}

std::string format_pose_line(const Posed& pose) {
  const Vec3d& t = pose.translation;
  const Quatd& q = pose.rotation;
  return format_double(t.x()) + " " + format_double(t.y()) + " " + format_double(t.z()) + " " +
         format_double(q.x()) + " " + format_double(q.y()) + " " + format_double(q.z()) + " " +
         format_double(q.w());
}

CameraIntrinsics load_camera(const std::filesystem::path& dataset_root) {
  const auto path = dataset_root / "camera.txt";
  const std::string ctx = path.string();
  const auto tok = split_tokens(first_line(read_text_file(path), ctx));
  if (tok.size() != 6) throw IoError("malformed camera line (expected 6 fields) in " + ctx);
  CameraIntrinsics cam;
  cam.fx = parse_double_token(tok[0], ctx);
  cam.fy = parse_double_token(tok[1], ctx);
  cam.cx = parse_double_token(tok[2], ctx);
  cam.cy = parse_double_token(tok[3], ctx);
  cam.width = static_cast<int>(parse_int_token(tok[4], ctx));
  cam.height = static_cast<int>(parse_int_token(tok[5], ctx));
  try {
    cam.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string(e.what()) + " in " + ctx);
  }
  return cam;
}

void write_camera(const std::filesystem::path& dataset_root, const CameraIntrinsics& cam) {
  cam.validate();
  std::filesystem::create_directories(dataset_root);
  const std::string line = format_double(cam.fx) + " " + format_double(cam.fy) + " " +
                           format_double(cam.cx) + " " + format_double(cam.cy) + " " +
                           std::to_string(cam.width) + " " + std::to_string(cam.height) + "\n";
  write_text_file_atomic(dataset_root / "camera.txt", line);
}

DepthGrid quantize_depth_mm(const DepthGrid& depth) {
  DepthGrid out(depth.rows(), depth.cols());
  for (Eigen::Index i = 0; i < depth.size(); ++i) {
    const long long mm = std::llround(depth(i) * 1000.0);
    out(i) = (mm < 0 || mm > 65535) ? 0.0 : static_cast<double>(mm) / 1000.0;
  }
  return out;
}

SemanticFrame load_frame(const std::filesystem::path& dataset_root, int index) {
  SemanticFrame frame;
  frame.intrinsics = load_camera(dataset_root);
  frame.timestamp = index;

  const auto dir = frame_dir(dataset_root, index);
  frame.labels = load_pgm16(dir / "labels.pgm");

  const LabelGrid depth_mm = load_pgm16(dir / "depth.pgm");
  frame.depth = depth_mm.cast<double>() / 1000.0;

  const auto instances_path = dir / "instances.pgm";
  if (std::filesystem::exists(instances_path)) frame.instances = load_pgm16(instances_path);

  const auto pose_path = dir / "pose.txt";
  frame.odom_pose = parse_pose_line(first_line(read_text_file(pose_path), pose_path.string()),
                                    pose_path.string());

  const auto check_dims = [&](const LabelGrid& g, const char* what) {
    if (g.rows() != frame.intrinsics.height || g.cols() != frame.intrinsics.width) {
      throw IoError(std::string("dimension mismatch: ") + what + " grid is " +
                    std::to_string(g.cols()) + "x" + std::to_string(g.rows()) + ", camera says " +
                    std::to_string(frame.intrinsics.width) + "x" +
                    std::to_string(frame.intrinsics.height) + " in " + dir.string());
    }
  };
  check_dims(frame.labels, "labels");
  check_dims(depth_mm, "depth");
  if (frame.instances) check_dims(*frame.instances, "instances");
  return frame;
}

void write_frame(const std::filesystem::path& dataset_root, int index, const SemanticFrame& frame) {
  const auto dir = frame_dir(dataset_root, index);
  std::filesystem::create_directories(dir);
  write_pgm16(dir / "labels.pgm", frame.labels);

  LabelGrid depth_mm(frame.depth.rows(), frame.depth.cols());
  for (Eigen::Index i = 0; i < frame.depth.size(); ++i) {
    const long long mm = std::llround(frame.depth(i) * 1000.0);
    depth_mm(i) = static_cast<std::uint16_t>(mm < 0 ? 0 : (mm > 65535 ? 0 : mm));
  }
  write_pgm16(dir / "depth.pgm", depth_mm);

  if (frame.instances) write_pgm16(dir / "instances.pgm", *frame.instances);
  write_text_file_atomic(dir / "pose.txt", format_pose_line(frame.odom_pose) + "\n");
}

int count_frames(const std::filesystem::path& dataset_root) {
  int n = 0;
  while (std::filesystem::exists(frame_dir(dataset_root, n) / "labels.pgm")) ++n;
  return n;
}

std::vector<Posed> load_pose_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<Posed> poses;
  size_t start = 0;
  int line_no = 1;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    if (!split_tokens(line).empty()) {
      poses.push_back(parse_pose_line(line, path.string() + ":" + std::to_string(line_no)));
    }
    start = end + 1;
    ++line_no;
  }
  return poses;
}

void write_pose_file(const std::filesystem::path& path, const std::vector<Posed>& poses) {
  std::string out;
  for (const auto& p : poses) out += format_pose_line(p) + "\n";
  write_text_file_atomic(path, out);
}

}  // namespace semloc
