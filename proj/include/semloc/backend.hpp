#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "semloc/geometry.hpp"
#include "semloc/graph.hpp"
#include "semloc/matching.hpp"
#include "semloc/types.hpp"

namespace semloc {

/// One term of the MAP objective E = sum e_i^T Omega_i e_i.
struct Constraint {
  enum class Kind {
    Matching,       // anchors a query vertex position to its matched db position
    RobotToVertex,  // vertex offset observed in a robot frame
    Odometry        // relative pose between consecutive robot poses
  };

  Kind kind = Kind::Matching;
  int residual_dim = 3;
  int pose_index = -1;   // RobotToVertex; Odometry: earlier pose
  int pose_index2 = -1;  // Odometry: later pose
  VertexId vertex_id = -1;
  Vec3d target = Vec3d::Zero();  // Matching: db position; RobotToVertex: offset in robot frame
  Posed relative_pose;           // Odometry measurement
  MatXd information;             // symmetric positive-definite, residual_dim^2
};

/// Unknowns are the window's robot poses plus the query vertex positions;
/// database positions stay fixed.
struct FactorGraph {
  int num_poses = 0;
  std::vector<VertexId> vertex_ids;  // ascending
  std::vector<Constraint> constraints;
};

struct BackendState {
  std::vector<Posed> poses;
  std::map<VertexId, Vec3d> vertex_positions;
};

struct BackendWeights {
  double sigma_odom_translation = 0.1;  // m
  double sigma_odom_rotation = 0.01;    // rad
  double sigma_vertex = 1.0;            // m
  double sigma_match = 2.0;             // m
};

struct LocalizationEstimate {
  std::vector<Posed> poses;  // optimized window poses, latest last
  std::map<VertexId, Vec3d> vertex_positions;
  double final_objective = 0.0;
  int iterations = 0;
  int inlier_count = 0;
  Posed consensus_transform;
  bool converged = false;
};

/// Least-squares rigid alignment (rotation + translation, no scale) with
/// T * query ~= db. Exact on noise-free rigid data. Throws DegenerateError
/// for fewer than 3 pairs or a rank-deficient (collinear) configuration.
Posed estimate_rigid_transform(const std::vector<Vec3d>& query_points,
                               const std::vector<Vec3d>& db_points);

struct RansacResult {
  std::vector<MatchCandidate> inliers;  // all satisfy the threshold under consensus
  Posed consensus;
  double max_inlier_residual = 0.0;
};

/// Samples minimal 3-candidate subsets (one candidate per distinct query
/// vertex), fits a rigid transform and keeps the largest inlier set (ties by
/// lower total residual), refit on all inliers until the set is stable.
/// Deterministic given rng_seed.
RansacResult ransac_filter(const MatchSet& matches,
                           const std::map<VertexId, Vec3d>& query_positions,
                           const std::map<VertexId, Vec3d>& db_positions,
                           double consistency_threshold, int iterations, std::uint64_t rng_seed);

/// Odometry constraints between consecutive poses, robot-to-vertex
/// constraints from every stored observation, matching constraints for every
/// inlier. Throws InsufficientMatchesError when inliers is empty (nothing
/// would anchor the graph globally).
FactorGraph build_factor_graph(const SemanticGraph& query_graph,
                               const std::vector<MatchCandidate>& inliers,
                               const SemanticGraph& db_graph, const std::vector<Posed>& odometry,
                               const BackendWeights& weights);

/// Flat tangent-space layout: 6 per pose then 3 per vertex (ascending id).
struct StateIndex {
  explicit StateIndex(const FactorGraph& fg);
  int num_poses = 0;
  std::vector<VertexId> vertex_ids;
  int dimension() const { return 6 * num_poses + 3 * static_cast<int>(vertex_ids.size()); }
  int pose_offset(int pose_index) const { return 6 * pose_index; }
  int vertex_offset(VertexId id) const;
};

/// Unweighted residual e_i of one constraint.
VecXd constraint_residual(const Constraint& c, const BackendState& state);

/// Analytic Jacobian of e_i with respect to the flat tangent of the state
/// (right increments on poses).
MatXd constraint_jacobian(const Constraint& c, const BackendState& state, const StateIndex& index);

BackendState retract_state(const BackendState& state, const VecXd& delta, const StateIndex& index);

double objective_value(const FactorGraph& fg, const BackendState& state);

struct OptimizeOptions {
  int max_iterations = 50;
  double tolerance = 1e-9;  // relative objective decrease
};

/// Gauss-Newton with step halving (up to 10 halvings per iteration), so the
/// objective never increases. Singular normal equations get a 1e-9 diagonal
/// regularization once; persistent singularity raises UnderdeterminedError.
LocalizationEstimate optimize(const FactorGraph& fg, const BackendState& init,
                              const OptimizeOptions& options);

/// Latest pose position at the mean of the inliers' db positions,
/// orientation from the consensus rotation applied to the latest odometry
/// orientation, earlier poses back-propagated through odometry, vertex
/// positions mapped through the consensus transform.
BackendState initialize_state(const SemanticGraph& query_graph,
                              const std::vector<MatchCandidate>& inliers,
                              const std::map<VertexId, Vec3d>& db_positions,
                              const std::vector<Posed>& odometry, const Posed& consensus_transform);

std::map<VertexId, Vec3d> vertex_positions_of(const SemanticGraph& graph);

}  // namespace semloc
