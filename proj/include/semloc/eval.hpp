#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "semloc/backend.hpp"
#include "semloc/config.hpp"
#include "semloc/walks.hpp"

namespace semloc {

struct EvalThresholds {
  double t_l = 20.0;              // localization threshold, meters
  std::vector<double> t_c_sweep;  // consistency thresholds, ascending
};

/// One localization attempt. Thresholds are applied at analysis time only,
/// so a single run serves every PR operating point.
struct TrialRecord {
  int frame_index = 0;
  bool attempted = false;
  Posed estimate;                // latest optimized pose; meaningless unless attempted
  Vec3d gt_position = Vec3d::Zero();
  double consensus_s = std::numeric_limits<double>::infinity();  // max inlier residual
  int inlier_count = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;

  double position_error() const {
    return attempted ? (estimate.translation - gt_position).norm()
                     : std::numeric_limits<double>::infinity();
  }
};

/// Matching, RANSAC and optimization for one query window against the
/// database. Failures (insufficient matches, degenerate geometry,
/// underdetermined systems) yield attempted = false instead of propagating.
TrialRecord localize_window(const SemanticGraph& query_graph, const DescriptorMap& query_desc,
                            const SemanticGraph& db_graph, const DescriptorMap& db_desc,
                            const PipelineConfig& config);

/// Slides the F-frame query window over the dataset and localizes each
/// window, recording one TrialRecord per full window (a sequence shorter
/// than F yields a single window over all its frames). Requires
/// gt_poses.txt in the dataset.
std::vector<TrialRecord> run_sequence(const std::filesystem::path& query_dataset,
                                      const SemanticGraph& db_graph, const DescriptorMap& db_desc,
                                      const PipelineConfig& config, int threads = 1);

struct PrPoint {
  double t_c = 0.0;
  double precision = 1.0;
  double recall = 0.0;
};

/// A record votes positive at t_c when attempted and s <= t_c; the vote is
/// correct when the position error is within t_L. Every window counts as a
/// localizable place: recall = TP / record count, precision = TP / positives
/// (1.0 when nothing votes positive).
std::vector<PrPoint> pr_curve(const std::vector<TrialRecord>& records,
                              const EvalThresholds& thresholds);

struct SuccessPoint {
  double distance = 0.0;
  double fraction = 0.0;
};

/// Cumulative fraction of attempted records with position error within each
/// distance bin; non-decreasing by construction.
std::vector<SuccessPoint> success_rate_curve(const std::vector<TrialRecord>& records,
                                             double max_distance, int bins);

/// Trapezoidal area under the precision-recall polyline, taken in sweep
/// order (recall is non-decreasing in t_c).
double pr_auc(const std::vector<PrPoint>& curve);

std::string trials_to_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> trials_from_csv(const std::string& text);
void save_trials(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> load_trials(const std::filesystem::path& path);

std::string pr_to_csv(const std::vector<PrPoint>& curve);
std::string success_to_csv(const std::vector<SuccessPoint>& curve);

}  // namespace semloc
