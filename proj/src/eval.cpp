#include "semloc/eval.hpp"

#include <algorithm>
#include <cmath>

#include "semloc/blobs.hpp"
#include "semloc/frame_io.hpp"
#include "semloc/io_util.hpp"

namespace semloc {

TrialRecord localize_window(const SemanticGraph& query_graph, const DescriptorMap& query_desc,
                            const SemanticGraph& db_graph, const DescriptorMap& db_desc,
                            const PipelineConfig& config) {
  TrialRecord record;
  const MatchSet matches =
      match_graphs(query_graph, query_desc, db_graph, db_desc, config.matching.k);
  const auto query_positions = vertex_positions_of(query_graph);
  const auto db_positions = vertex_positions_of(db_graph);

  RansacResult consensus;
  try {
    consensus = ransac_filter(matches, query_positions, db_positions, config.ransac.t_c,
                              config.ransac.iterations, config.ransac.rng_seed);
  } catch (const InsufficientMatchesError&) {
    return record;
  } catch (const DegenerateError&) {
    return record;
  }
  record.inlier_count = static_cast<int>(consensus.inliers.size());
  if (consensus.inliers.empty()) return record;

  std::vector<Posed> odometry;
  odometry.reserve(query_graph.frame_poses.size());
  for (const auto& [frame, pose] : query_graph.frame_poses) odometry.push_back(pose);

  try {
    const BackendState init = initialize_state(query_graph, consensus.inliers, db_positions,
                                               odometry, consensus.consensus);
    const FactorGraph fg = build_factor_graph(query_graph, consensus.inliers, db_graph, odometry,
                                              config.backend.weights);
    OptimizeOptions options;
    options.max_iterations = config.backend.max_iterations;
    options.tolerance = config.backend.tolerance;
    LocalizationEstimate estimate = optimize(fg, init, options);
    estimate.inlier_count = record.inlier_count;
    estimate.consensus_transform = consensus.consensus;

    record.attempted = true;
    record.estimate = estimate.poses.back();
    record.consensus_s = consensus.max_inlier_residual;
    record.objective = estimate.final_objective;
    record.iterations = estimate.iterations;
    record.converged = estimate.converged;
  } catch (const InsufficientMatchesError&) {
  } catch (const UnderdeterminedError&) {
  } catch (const DegenerateError&) {
  }
  return record;
}

std::vector<TrialRecord> run_sequence(const std::filesystem::path& query_dataset,
                                      const SemanticGraph& db_graph, const DescriptorMap& db_desc,
                                      const PipelineConfig& config, int threads) {
  const CameraIntrinsics cam = load_camera(query_dataset);
  const int frame_count = count_frames(query_dataset);
  if (frame_count == 0) throw IoError("empty dataset: " + query_dataset.string());

  const std::vector<Posed> gt = load_pose_file(query_dataset / "gt_poses.txt");
  if (static_cast<int>(gt.size()) < frame_count) {
    throw IoError("gt_poses.txt has fewer lines than frames in " + query_dataset.string());
  }

  const int min_size = effective_min_blob_size(config.blobs.min_blob_size, cam);
  const int window = config.graph.query_frames;

  WindowedGraphBuilder builder(window, config.graph.merge_distance, config.graph.edge_distance);
  std::vector<TrialRecord> records;
  for (int i = 0; i < frame_count; ++i) {
    SemanticFrame frame = load_frame(query_dataset, i);
    frame.labels = smooth_labels(frame.labels, config.blobs.smoothing_radius);
    const BlobExtraction extraction =
        extract_blobs(frame, min_size, config.blobs.rejected_classes);
    const SemanticGraph frame_graph =
        config.graph.image_space
            ? build_image_space_graph(extraction.blobs, config.graph.pixel_edge_distance,
                                      frame.odom_pose, i)
            : build_frame_graph(extraction.blobs, config.graph.edge_distance, frame.odom_pose, i);
    builder.push_frame(frame_graph);

    const bool full_window = i >= window - 1;
    const bool last_partial = frame_count < window && i == frame_count - 1;
    if (!full_window && !last_partial) continue;

    const SemanticGraph& query_graph = builder.graph();
    const DescriptorMap query_desc = describe_graph(query_graph, config.walks, threads);
    TrialRecord record = localize_window(query_graph, query_desc, db_graph, db_desc, config);
    record.frame_index = i;
    record.gt_position = gt[i].translation;
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<PrPoint> pr_curve(const std::vector<TrialRecord>& records,
                              const EvalThresholds& thresholds) {
  if (records.empty()) throw Error("pr_curve: no records");
  std::vector<PrPoint> curve;
  curve.reserve(thresholds.t_c_sweep.size());
  for (const double t_c : thresholds.t_c_sweep) {
    int true_positive = 0;
    int positive = 0;
    for (const TrialRecord& r : records) {
      if (!(r.attempted && r.consensus_s <= t_c)) continue;
      ++positive;
      if (r.position_error() <= thresholds.t_l) ++true_positive;
    }
    PrPoint p;
    p.t_c = t_c;
    p.precision = positive == 0 ? 1.0 : static_cast<double>(true_positive) / positive;
    p.recall = static_cast<double>(true_positive) / static_cast<double>(records.size());
    curve.push_back(p);
  }
  return curve;
}

std::vector<SuccessPoint> success_rate_curve(const std::vector<TrialRecord>& records,
                                             double max_distance, int bins) {
  if (bins < 1) throw Error("success_rate_curve: bins must be >= 1");
  if (!(max_distance > 0.0)) throw Error("success_rate_curve: max_distance must be positive");

  std::vector<double> errors;
  for (const TrialRecord& r : records) {
    if (r.attempted) errors.push_back(r.position_error());
  }
  std::vector<SuccessPoint> curve;
  curve.reserve(bins);
  for (int k = 1; k <= bins; ++k) {
    SuccessPoint p;
    p.distance = max_distance * k / bins;
    if (!errors.empty()) {
      const auto within = std::count_if(errors.begin(), errors.end(),
                                        [&](double e) { return e <= p.distance; });
      p.fraction = static_cast<double>(within) / static_cast<double>(errors.size());
    }
    curve.push_back(p);
  }
  return curve;
}

double pr_auc(const std::vector<PrPoint>& curve) {
  double area = 0.0;
  for (size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].recall - curve[i - 1].recall) * 0.5 *
            (curve[i].precision + curve[i - 1].precision);
  }
  return area;
}

namespace {
constexpr const char* kTrialsHeader =
    "frame_index,tx,ty,tz,qx,qy,qz,qw,objective,iters,inliers,converged,gt_x,gt_y,gt_z,s,"
    "attempted";
}

std::string trials_to_csv(const std::vector<TrialRecord>& records) {
  std::string out = std::string(kTrialsHeader) + "\n";
  for (const TrialRecord& r : records) {
    const Vec3d& t = r.estimate.translation;
    const Quatd& q = r.estimate.rotation;
    out += std::to_string(r.frame_index) + "," + format_double(t.x()) + "," +
           format_double(t.y()) + "," + format_double(t.z()) + "," + format_double(q.x()) + "," +
           format_double(q.y()) + "," + format_double(q.z()) + "," + format_double(q.w()) + "," +
           format_double(r.objective) + "," + std::to_string(r.iterations) + "," +
           std::to_string(r.inlier_count) + "," + (r.converged ? "1" : "0") + "," +
           format_double(r.gt_position.x()) + "," + format_double(r.gt_position.y()) + "," +
           format_double(r.gt_position.z()) + "," + format_double(r.consensus_s) + "," +
           (r.attempted ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<TrialRecord> trials_from_csv(const std::string& text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty() || lines.front() != kTrialsHeader) {
    throw ConfigError("malformed trials CSV: missing or wrong header");
  }
  if (lines.size() == 1) throw ConfigError("empty trials CSV: no records");

  std::vector<TrialRecord> records;
  for (size_t i = 1; i < lines.size(); ++i) {
    std::string line = lines[i];
    std::replace(line.begin(), line.end(), ',', ' ');
    const auto tok = split_tokens(line);
    if (tok.size() != 17) {
      throw ConfigError("malformed trials CSV: line " + std::to_string(i + 1) + " has " +
                        std::to_string(tok.size()) + " fields, expected 17");
    }
    const std::string ctx = "trials CSV line " + std::to_string(i + 1);
    try {
      TrialRecord r;
      r.frame_index = static_cast<int>(parse_int_token(tok[0], ctx));
      const Vec3d t(parse_double_token(tok[1], ctx), parse_double_token(tok[2], ctx),
                    parse_double_token(tok[3], ctx));
      const Quatd q(parse_double_token(tok[7], ctx), parse_double_token(tok[4], ctx),
                    parse_double_token(tok[5], ctx), parse_double_token(tok[6], ctx));
      r.estimate.translation = t;
      r.estimate.rotation = q.coeffs().allFinite() ? q.normalized() : Quatd::Identity();
      r.objective = parse_double_token(tok[8], ctx);
      r.iterations = static_cast<int>(parse_int_token(tok[9], ctx));
      r.inlier_count = static_cast<int>(parse_int_token(tok[10], ctx));
      r.converged = parse_int_token(tok[11], ctx) != 0;
      r.gt_position = Vec3d(parse_double_token(tok[12], ctx), parse_double_token(tok[13], ctx),
                            parse_double_token(tok[14], ctx));
      r.consensus_s = parse_double_token(tok[15], ctx);
      r.attempted = parse_int_token(tok[16], ctx) != 0;
      records.push_back(std::move(r));
    } catch (const IoError& e) {
      throw ConfigError(std::string("malformed trials CSV: ") + e.what());
    }
  }
  return records;
}

void save_trials(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  write_text_file_atomic(path, trials_to_csv(records));
}

std::vector<TrialRecord> load_trials(const std::filesystem::path& path) {
  return trials_from_csv(read_text_file(path));
}

std::string pr_to_csv(const std::vector<PrPoint>& curve) {
  std::string out = "t_c,precision,recall\n";
  for (const PrPoint& p : curve) {
    out += format_double(p.t_c) + "," + format_double(p.precision) + "," +
           format_double(p.recall) + "\n";
  }
  return out;
}

std::string success_to_csv(const std::vector<SuccessPoint>& curve) {
  std::string out = "distance,fraction\n";
  for (const SuccessPoint& p : curve) {
    out += format_double(p.distance) + "," + format_double(p.fraction) + "\n";
  }
  return out;
}

}  // namespace semloc
