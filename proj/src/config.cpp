#include "semloc/config.hpp"

#include <algorithm>
#include <cmath>

#include "semloc/io_util.hpp"

namespace semloc {
namespace {

// Line-oriented "[section]" / "key = value" format with '#' comments and
// bracketed numeric arrays. Every key must be consumed or parsing fails.
class ConfigMap {
 public:
  ConfigMap(const std::string& text, const std::vector<std::string>& overrides) {
    std::string section;
    size_t start = 0;
    int line_no = 0;
    while (start <= text.size()) {
      size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(start, end - start);
      start = end + 1;
      ++line_no;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("unterminated section header: " + line);
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("expected key = value at line " + std::to_string(line_no) + ": " + line);
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key at line " + std::to_string(line_no));
      set(section.empty() ? key : section + "." + key, value);
    }
    for (const std::string& ov : overrides) {
      const size_t eq = ov.find('=');
      if (eq == std::string::npos) throw ConfigError("override must be section.key=value: " + ov);
      set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }
  }

  bool get_double(const std::string& name, double& out) {
    const std::string* raw = fetch(name);
    if (raw == nullptr) return false;
    out = parse_double(*raw, name);
    return true;
  }

  bool get_int(const std::string& name, int& out) {
    const std::string* raw = fetch(name);
    if (raw == nullptr) return false;
    out = static_cast<int>(parse_int(*raw, name));
    return true;
  }

  bool get_u64(const std::string& name, std::uint64_t& out) {
    const std::string* raw = fetch(name);
    if (raw == nullptr) return false;
    const long long v = parse_int(*raw, name);
    if (v < 0) throw ConfigError(name + ": must be non-negative");
    out = static_cast<std::uint64_t>(v);
    return true;
  }

  bool get_bool(const std::string& name, bool& out) {
    const std::string* raw = fetch(name);
    if (raw == nullptr) return false;
    if (*raw == "true") {
      out = true;
    } else if (*raw == "false") {
      out = false;
    } else {
      throw ConfigError(name + ": expected true or false, got '" + *raw + "'");
    }
    return true;
  }

  bool get_string(const std::string& name, std::string& out) {
    const std::string* raw = fetch(name);
    if (raw == nullptr) return false;
    out = *raw;
    return true;
  }

  bool get_double_list(const std::string& name, std::vector<double>& out) {
    const std::string* raw = fetch(name);
    if (raw == nullptr) return false;
    out.clear();
    for (const std::string& tok : list_tokens(*raw, name)) out.push_back(parse_double(tok, name));
    return true;
  }

  bool get_int_list(const std::string& name, std::vector<int>& out) {
    const std::string* raw = fetch(name);
    if (raw == nullptr) return false;
    out.clear();
    for (const std::string& tok : list_tokens(*raw, name)) {
      out.push_back(static_cast<int>(parse_int(tok, name)));
    }
    return true;
  }

  void finish() const {
    for (const auto& [key, value] : values_) {
      if (!consumed_.count(key)) throw ConfigError("unknown key: " + key);
    }
  }

 private:
  static std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  void set(const std::string& name, const std::string& value) { values_[name] = value; }

  const std::string* fetch(const std::string& name) {
    const auto it = values_.find(name);
    if (it == values_.end()) return nullptr;
    consumed_.insert(name);
    return &it->second;
  }

  static double parse_double(const std::string& raw, const std::string& name) {
    try {
      return parse_double_token(raw, name);
    } catch (const IoError& e) {
      throw ConfigError(name + ": " + e.what());
    }
  }

  static long long parse_int(const std::string& raw, const std::string& name) {
    try {
      return parse_int_token(raw, name);
    } catch (const IoError& e) {
      throw ConfigError(name + ": " + e.what());
    }
  }

  static std::vector<std::string> list_tokens(const std::string& raw, const std::string& name) {
    std::string body = raw;
    if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
      throw ConfigError(name + ": expected a bracketed list, got '" + raw + "'");
    }
    body = body.substr(1, body.size() - 2);
    std::replace(body.begin(), body.end(), ',', ' ');
    return split_tokens(body);
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError(field + ": " + why);
}

}  // namespace

void PipelineConfig::validate() const {
  require(blobs.min_blob_size >= 1, "blobs.min_blob_size", "must be >= 1");
  require(blobs.smoothing_radius >= 0, "blobs.smoothing_radius", "must be >= 0");
  for (const ClassId c : blobs.rejected_classes) {
    require(c >= 0, "blobs.rejected_classes", "entries must be non-negative");
  }
  require(graph.merge_distance > 0.0, "graph.merge_distance", "must be positive");
  require(graph.edge_distance > 0.0, "graph.edge_distance", "must be positive");
  require(graph.query_frames >= 1, "graph.query_frames", "must be >= 1");
  require(graph.pixel_edge_distance > 0.0, "graph.pixel_edge_distance", "must be positive");
  require(walks.num_walks >= 1, "walks.num_walks", "must be >= 1");
  require(walks.walk_depth >= 1, "walks.walk_depth", "must be >= 1");
  require(matching.k >= 1, "matching.k", "must be >= 1");
  require(ransac.t_c > 0.0, "ransac.t_c", "must be positive");
  require(ransac.iterations >= 1, "ransac.iterations", "must be >= 1");
  require(backend.weights.sigma_odom_translation > 0.0, "backend.sigma_odom_translation",
          "must be positive");
  require(backend.weights.sigma_odom_rotation > 0.0, "backend.sigma_odom_rotation",
          "must be positive");
  require(backend.weights.sigma_vertex > 0.0, "backend.sigma_vertex", "must be positive");
  require(backend.weights.sigma_match > 0.0, "backend.sigma_match", "must be positive");
  require(backend.max_iterations >= 1, "backend.max_iterations", "must be >= 1");
  require(backend.tolerance > 0.0, "backend.tolerance", "must be positive");
  require(eval.t_l >= 0.0, "eval.t_l", "must be >= 0 (0 selects 2 x merge_distance)");
  require(!eval.t_c_sweep.empty(), "eval.t_c_sweep", "must not be empty");
  for (size_t i = 0; i < eval.t_c_sweep.size(); ++i) {
    require(eval.t_c_sweep[i] > 0.0, "eval.t_c_sweep", "entries must be positive");
    if (i > 0) {
      require(eval.t_c_sweep[i] > eval.t_c_sweep[i - 1], "eval.t_c_sweep", "must be ascending");
    }
  }
  require(eval.success_max_distance > 0.0, "eval.success_max_distance", "must be positive");
  require(eval.success_bins >= 1, "eval.success_bins", "must be >= 1");
}

PipelineConfig default_config() {
  PipelineConfig cfg;
  for (int i = 1; i <= 20; ++i) cfg.eval.t_c_sweep.push_back(0.5 * i);
  return cfg;
}

PipelineConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  ConfigMap map(text, overrides);
  PipelineConfig cfg = default_config();

  map.get_int("blobs.min_blob_size", cfg.blobs.min_blob_size);
  map.get_int("blobs.smoothing_radius", cfg.blobs.smoothing_radius);
  std::vector<int> rejected;
  if (map.get_int_list("blobs.rejected_classes", rejected)) {
    cfg.blobs.rejected_classes = std::set<ClassId>(rejected.begin(), rejected.end());
  }

  map.get_double("graph.merge_distance", cfg.graph.merge_distance);
  map.get_double("graph.edge_distance", cfg.graph.edge_distance);
  map.get_int("graph.query_frames", cfg.graph.query_frames);
  map.get_bool("graph.image_space", cfg.graph.image_space);
  map.get_double("graph.pixel_edge_distance", cfg.graph.pixel_edge_distance);

  map.get_int("walks.num_walks", cfg.walks.num_walks);
  map.get_int("walks.walk_depth", cfg.walks.walk_depth);
  map.get_bool("walks.forbid_backtrack", cfg.walks.forbid_backtrack);
  map.get_bool("walks.dedupe_walks", cfg.walks.dedupe_walks);
  map.get_u64("walks.rng_seed", cfg.walks.rng_seed);
  map.get_bool("walks.store_descriptors", cfg.store_descriptors);

  map.get_int("matching.k", cfg.matching.k);

  map.get_double("ransac.t_c", cfg.ransac.t_c);
  map.get_int("ransac.iterations", cfg.ransac.iterations);
  map.get_u64("ransac.rng_seed", cfg.ransac.rng_seed);

  map.get_double("backend.sigma_odom_translation", cfg.backend.weights.sigma_odom_translation);
  map.get_double("backend.sigma_odom_rotation", cfg.backend.weights.sigma_odom_rotation);
  map.get_double("backend.sigma_vertex", cfg.backend.weights.sigma_vertex);
  map.get_double("backend.sigma_match", cfg.backend.weights.sigma_match);
  map.get_int("backend.max_iterations", cfg.backend.max_iterations);
  map.get_double("backend.tolerance", cfg.backend.tolerance);

  map.get_double("eval.t_l", cfg.eval.t_l);
  map.get_double_list("eval.t_c_sweep", cfg.eval.t_c_sweep);
  map.get_double("eval.success_max_distance", cfg.eval.success_max_distance);
  map.get_int("eval.success_bins", cfg.eval.success_bins);

  map.finish();
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
  return parse_config(read_text_file(path), overrides);
}

namespace {

std::string format_int_list(const std::set<ClassId>& values) {
  std::string out = "[";
  bool first = true;
  for (const ClassId v : values) {
    if (!first) out += ", ";
    first = false;
    out += std::to_string(v);
  }
  return out + "]";
}

std::string format_double_list(const std::vector<double>& values) {
  std::string out = "[";
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(values[i]);
  }
  return out + "]";
}

}  // namespace

std::string serialize_config(const PipelineConfig& c) {
  std::string s;
  s += "[blobs]\n";
  s += "min_blob_size = " + std::to_string(c.blobs.min_blob_size) + "\n";
  s += "smoothing_radius = " + std::to_string(c.blobs.smoothing_radius) + "\n";
  s += "rejected_classes = " + format_int_list(c.blobs.rejected_classes) + "\n";
  s += "\n[graph]\n";
  s += "merge_distance = " + format_double(c.graph.merge_distance) + "\n";
  s += "edge_distance = " + format_double(c.graph.edge_distance) + "\n";
  s += "query_frames = " + std::to_string(c.graph.query_frames) + "\n";
  s += std::string("image_space = ") + (c.graph.image_space ? "true" : "false") + "\n";
  s += "pixel_edge_distance = " + format_double(c.graph.pixel_edge_distance) + "\n";
  s += "\n[walks]\n";
  s += "num_walks = " + std::to_string(c.walks.num_walks) + "\n";
  s += "walk_depth = " + std::to_string(c.walks.walk_depth) + "\n";
  s += std::string("forbid_backtrack = ") + (c.walks.forbid_backtrack ? "true" : "false") + "\n";
  s += std::string("dedupe_walks = ") + (c.walks.dedupe_walks ? "true" : "false") + "\n";
  s += "rng_seed = " + std::to_string(c.walks.rng_seed) + "\n";
  s += std::string("store_descriptors = ") + (c.store_descriptors ? "true" : "false") + "\n";
  s += "\n[matching]\n";
  s += "k = " + std::to_string(c.matching.k) + "\n";
  s += "\n[ransac]\n";
  s += "t_c = " + format_double(c.ransac.t_c) + "\n";
  s += "iterations = " + std::to_string(c.ransac.iterations) + "\n";
  s += "rng_seed = " + std::to_string(c.ransac.rng_seed) + "\n";
  s += "\n[backend]\n";
  s += "sigma_odom_translation = " + format_double(c.backend.weights.sigma_odom_translation) + "\n";
  s += "sigma_odom_rotation = " + format_double(c.backend.weights.sigma_odom_rotation) + "\n";
  s += "sigma_vertex = " + format_double(c.backend.weights.sigma_vertex) + "\n";
  s += "sigma_match = " + format_double(c.backend.weights.sigma_match) + "\n";
  s += "max_iterations = " + std::to_string(c.backend.max_iterations) + "\n";
  s += "tolerance = " + format_double(c.backend.tolerance) + "\n";
  s += "\n[eval]\n";
  s += "t_l = " + format_double(c.eval.t_l) + "\n";
  s += "t_c_sweep = " + format_double_list(c.eval.t_c_sweep) + "\n";
  s += "success_max_distance = " + format_double(c.eval.success_max_distance) + "\n";
  s += "success_bins = " + std::to_string(c.eval.success_bins) + "\n";
  return s;
}

void WorldFileSpec::validate() const {
  require(world.extent > 0.0, "world.extent", "must be positive");
  for (const auto& [count, name] :
       {std::pair<int, const char*>{world.streets, "world.streets"},
        {world.buildings, "world.buildings"},
        {world.trees, "world.trees"},
        {world.cars, "world.cars"},
        {world.fences, "world.fences"},
        {world.signs, "world.signs"}}) {
    require(count >= 0, name, "must be non-negative");
  }
  camera.validate();
  require(trajectory.path.size() >= 2, "trajectory.path", "needs at least 2 waypoints");
  require(trajectory.step > 0.0, "trajectory.step", "must be positive");
  require(noise.odom_sigma_translation >= 0.0, "trajectory.odom_sigma", "must be >= 0");
  require(noise.odom_sigma_rotation_deg >= 0.0, "trajectory.odom_rot_sigma_deg", "must be >= 0");
  require(noise.label_flip_rate >= 0.0 && noise.label_flip_rate <= 1.0,
          "trajectory.label_flip_rate", "must be in [0, 1]");
}

WorldFileSpec parse_world_spec(const std::string& text,
                               const std::vector<std::string>& overrides) {
  ConfigMap map(text, overrides);
  WorldFileSpec spec;

  map.get_double("world.extent", spec.world.extent);
  map.get_int("world.streets", spec.world.streets);
  map.get_int("world.buildings", spec.world.buildings);
  map.get_int("world.trees", spec.world.trees);
  map.get_int("world.cars", spec.world.cars);
  map.get_int("world.fences", spec.world.fences);
  map.get_int("world.signs", spec.world.signs);
  map.get_u64("world.rng_seed", spec.world.rng_seed);

  map.get_double("camera.fx", spec.camera.fx);
  map.get_double("camera.fy", spec.camera.fy);
  map.get_double("camera.cx", spec.camera.cx);
  map.get_double("camera.cy", spec.camera.cy);
  map.get_int("camera.width", spec.camera.width);
  map.get_int("camera.height", spec.camera.height);

  std::string kind;
  if (map.get_string("trajectory.kind", kind)) {
    if (kind == "forward") {
      spec.trajectory.kind = TrajectorySpec::Kind::Forward;
    } else if (kind == "rear") {
      spec.trajectory.kind = TrajectorySpec::Kind::Rear;
    } else if (kind == "aerial") {
      spec.trajectory.kind = TrajectorySpec::Kind::Aerial;
    } else {
      throw ConfigError("trajectory.kind: expected forward, rear or aerial, got '" + kind + "'");
    }
  }
  std::vector<double> path;
  if (map.get_double_list("trajectory.path", path)) {
    if (path.size() < 4 || path.size() % 2 != 0) {
      throw ConfigError("trajectory.path: expected an even list of at least 4 coordinates");
    }
    spec.trajectory.path.clear();
    for (size_t i = 0; i < path.size(); i += 2) {
      spec.trajectory.path.emplace_back(path[i], path[i + 1]);
    }
  }
  map.get_double("trajectory.step", spec.trajectory.step);
  map.get_double("trajectory.height", spec.trajectory.height);
  map.get_double("trajectory.pitch_deg", spec.trajectory.pitch_deg);
  map.get_double("trajectory.odom_sigma", spec.noise.odom_sigma_translation);
  map.get_double("trajectory.odom_rot_sigma_deg", spec.noise.odom_sigma_rotation_deg);
  map.get_double("trajectory.label_flip_rate", spec.noise.label_flip_rate);
  map.get_u64("trajectory.noise_seed", spec.noise.rng_seed);

  map.finish();
  spec.validate();
  return spec;
}

WorldFileSpec load_world_spec(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides) {
  return parse_world_spec(read_text_file(path), overrides);
}

std::string serialize_world_spec(const WorldFileSpec& spec) {
  std::string s;
  s += "[world]\n";
  s += "extent = " + format_double(spec.world.extent) + "\n";
  s += "streets = " + std::to_string(spec.world.streets) + "\n";
  s += "buildings = " + std::to_string(spec.world.buildings) + "\n";
  s += "trees = " + std::to_string(spec.world.trees) + "\n";
  s += "cars = " + std::to_string(spec.world.cars) + "\n";
  s += "fences = " + std::to_string(spec.world.fences) + "\n";
  s += "signs = " + std::to_string(spec.world.signs) + "\n";
  s += "rng_seed = " + std::to_string(spec.world.rng_seed) + "\n";
  s += "\n[camera]\n";
  s += "fx = " + format_double(spec.camera.fx) + "\n";
  s += "fy = " + format_double(spec.camera.fy) + "\n";
  s += "cx = " + format_double(spec.camera.cx) + "\n";
  s += "cy = " + format_double(spec.camera.cy) + "\n";
  s += "width = " + std::to_string(spec.camera.width) + "\n";
  s += "height = " + std::to_string(spec.camera.height) + "\n";
  s += "\n[trajectory]\n";
  const char* kind = spec.trajectory.kind == TrajectorySpec::Kind::Forward
                         ? "forward"
                         : (spec.trajectory.kind == TrajectorySpec::Kind::Rear ? "rear" : "aerial");
  s += std::string("kind = ") + kind + "\n";
  s += "path = [";
  for (size_t i = 0; i < spec.trajectory.path.size(); ++i) {
    if (i > 0) s += ", ";
    s += format_double(spec.trajectory.path[i].x()) + ", " +
         format_double(spec.trajectory.path[i].y());
  }
  s += "]\n";
  s += "step = " + format_double(spec.trajectory.step) + "\n";
  s += "height = " + format_double(spec.trajectory.height) + "\n";
  s += "pitch_deg = " + format_double(spec.trajectory.pitch_deg) + "\n";
  s += "odom_sigma = " + format_double(spec.noise.odom_sigma_translation) + "\n";
  s += "odom_rot_sigma_deg = " + format_double(spec.noise.odom_sigma_rotation_deg) + "\n";
  s += "label_flip_rate = " + format_double(spec.noise.label_flip_rate) + "\n";
  s += "noise_seed = " + std::to_string(spec.noise.rng_seed) + "\n";
  return s;
}

}  // namespace semloc
