#include "semloc/backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "semloc/errors.hpp"
#include "semloc/rng.hpp"

namespace semloc {

Posed estimate_rigid_transform(const std::vector<Vec3d>& query_points,
                               const std::vector<Vec3d>& db_points) {
  const size_t n = query_points.size();
  if (n != db_points.size()) throw Error("rigid transform: point count mismatch");
  if (n < 3) throw DegenerateError("degenerate: fewer than 3 point pairs");

  Vec3d cq = Vec3d::Zero(), cd = Vec3d::Zero();
  for (size_t i = 0; i < n; ++i) {
    cq += query_points[i];
    cd += db_points[i];
  }
  cq /= static_cast<double>(n);
  cd /= static_cast<double>(n);

  Mat3d cross = Mat3d::Zero();  // sum of centered query x db outer products
  for (size_t i = 0; i < n; ++i) {
    cross += (query_points[i] - cq) * (db_points[i] - cd).transpose();
  }

  Eigen::JacobiSVD<Mat3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3d sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-9 * sv(0)) {
    throw DegenerateError("degenerate: rank-deficient point configuration");
  }
  Mat3d rot = svd.matrixV() * svd.matrixU().transpose();
  if (rot.determinant() < 0.0) {
    Mat3d flip = Mat3d::Identity();
    flip(2, 2) = -1.0;
    rot = svd.matrixV() * flip * svd.matrixU().transpose();
  }
  return Posed(rot, cd - rot * cq);
}

namespace {

struct ScoredSet {
  Posed transform;
  std::vector<MatchCandidate> inliers;
  double total_residual = 0.0;
  double max_residual = 0.0;
};

ScoredSet collect_inliers(const Posed& transform, const std::vector<MatchCandidate>& candidates,
                          const std::map<VertexId, Vec3d>& query_positions,
                          const std::map<VertexId, Vec3d>& db_positions, double threshold) {
  ScoredSet out;
  out.transform = transform;
  for (const MatchCandidate& c : candidates) {
    const double r =
        (transform * query_positions.at(c.query_vertex_id) - db_positions.at(c.db_vertex_id))
            .norm();
    if (r <= threshold) {
      out.inliers.push_back(c);
      out.total_residual += r;
      out.max_residual = std::max(out.max_residual, r);
    }
  }
  return out;
}

bool same_pairs(const std::vector<MatchCandidate>& a, const std::vector<MatchCandidate>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].query_vertex_id != b[i].query_vertex_id || a[i].db_vertex_id != b[i].db_vertex_id) {
      return false;
    }
  }
  return true;
}

}  // namespace

RansacResult ransac_filter(const MatchSet& matches,
                           const std::map<VertexId, Vec3d>& query_positions,
                           const std::map<VertexId, Vec3d>& db_positions,
                           double consistency_threshold, int iterations, std::uint64_t rng_seed) {
  if (!(consistency_threshold > 0.0)) throw Error("ransac: consistency threshold must be positive");
  if (iterations < 1) throw Error("ransac: iterations must be >= 1");

  std::vector<VertexId> matched_query_ids;
  for (const auto& [qid, list] : matches.candidates) {
    if (!list.empty()) matched_query_ids.push_back(qid);
  }
  if (matched_query_ids.size() < 3) {
    throw InsufficientMatchesError("insufficient matches: " +
                                   std::to_string(matched_query_ids.size()) +
                                   " matched query vertices, need 3");
  }
  const std::vector<MatchCandidate> all = matches.flattened();

  Rng rng(rng_seed);
  bool have_best = false;
  ScoredSet best;
  std::vector<size_t> pool(matched_query_ids.size());
  for (int iter = 0; iter < iterations; ++iter) {
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    std::vector<Vec3d> sample_q(3), sample_d(3);
    for (int k = 0; k < 3; ++k) {
      const size_t j = k + rng.uniform_index(pool.size() - k);
      std::swap(pool[k], pool[j]);
      const VertexId qid = matched_query_ids[pool[k]];
      const auto& list = matches.candidates.at(qid);
      const MatchCandidate& c = list[rng.uniform_index(list.size())];
      sample_q[k] = query_positions.at(c.query_vertex_id);
      sample_d[k] = db_positions.at(c.db_vertex_id);
    }
    Posed transform;
    try {
      transform = estimate_rigid_transform(sample_q, sample_d);
    } catch (const DegenerateError&) {
      continue;
    }
    ScoredSet scored =
        collect_inliers(transform, all, query_positions, db_positions, consistency_threshold);
    if (!have_best || scored.inliers.size() > best.inliers.size() ||
        (scored.inliers.size() == best.inliers.size() &&
         scored.total_residual < best.total_residual)) {
      best = std::move(scored);
      have_best = true;
    }
  }
  if (!have_best) throw DegenerateError("degenerate: no valid RANSAC sample");

  // Refit on the full inlier set until it stabilizes; every returned set is
  // recomputed under the returned transform, so the threshold bound holds.
  for (int round = 0; round < 10 && best.inliers.size() >= 3; ++round) {
    std::vector<Vec3d> q, d;
    q.reserve(best.inliers.size());
    d.reserve(best.inliers.size());
    for (const MatchCandidate& c : best.inliers) {
      q.push_back(query_positions.at(c.query_vertex_id));
      d.push_back(db_positions.at(c.db_vertex_id));
    }
    Posed refit;
    try {
      refit = estimate_rigid_transform(q, d);
    } catch (const DegenerateError&) {
      break;
    }
    ScoredSet rescored =
        collect_inliers(refit, all, query_positions, db_positions, consistency_threshold);
    if (rescored.inliers.size() < 3) break;
    const bool stable = same_pairs(rescored.inliers, best.inliers);
    best = std::move(rescored);
    if (stable) break;
  }

  RansacResult out;
  out.inliers = std::move(best.inliers);
  out.consensus = best.transform;
  out.max_inlier_residual = best.max_residual;
  return out;
}

FactorGraph build_factor_graph(const SemanticGraph& query_graph,
                               const std::vector<MatchCandidate>& inliers,
                               const SemanticGraph& db_graph, const std::vector<Posed>& odometry,
                               const BackendWeights& weights) {
  if (inliers.empty()) {
    throw InsufficientMatchesError("empty inlier list: no matching constraints to anchor on");
  }
  if (odometry.size() != query_graph.frame_poses.size()) {
    throw Error("build_factor_graph: odometry size must match the graph's frame count");
  }

  FactorGraph fg;
  fg.num_poses = static_cast<int>(odometry.size());
  for (const auto& [id, v] : query_graph.vertices) fg.vertex_ids.push_back(id);

  std::map<int, int> frame_to_slot;
  for (size_t i = 0; i < query_graph.frame_poses.size(); ++i) {
    frame_to_slot[query_graph.frame_poses[i].first] = static_cast<int>(i);
  }

  const Mat3d info_match = Mat3d::Identity() / (weights.sigma_match * weights.sigma_match);
  const Mat3d info_vertex = Mat3d::Identity() / (weights.sigma_vertex * weights.sigma_vertex);
  Mat6d info_odom = Mat6d::Zero();
  info_odom.topLeftCorner<3, 3>() =
      Mat3d::Identity() / (weights.sigma_odom_translation * weights.sigma_odom_translation);
  info_odom.bottomRightCorner<3, 3>() =
      Mat3d::Identity() / (weights.sigma_odom_rotation * weights.sigma_odom_rotation);

  for (int i = 0; i + 1 < fg.num_poses; ++i) {
    Constraint c;
    c.kind = Constraint::Kind::Odometry;
    c.residual_dim = 6;
    c.pose_index = i;
    c.pose_index2 = i + 1;
    c.relative_pose = odometry[i].inverse() * odometry[i + 1];
    c.information = info_odom;
    fg.constraints.push_back(std::move(c));
  }

  for (const auto& [id, v] : query_graph.vertices) {
    for (const Observation& obs : v.observations) {
      const auto slot = frame_to_slot.find(obs.frame_index);
      if (slot == frame_to_slot.end()) {
        throw Error("build_factor_graph: observation references a frame outside the window");
      }
      Constraint c;
      c.kind = Constraint::Kind::RobotToVertex;
      c.residual_dim = 3;
      c.pose_index = slot->second;
      c.vertex_id = id;
      c.target = obs.offset;
      c.information = info_vertex;
      fg.constraints.push_back(std::move(c));
    }
  }

  for (const MatchCandidate& m : inliers) {
    if (!query_graph.vertices.count(m.query_vertex_id)) {
      throw Error("build_factor_graph: inlier references unknown query vertex");
    }
    const auto db_it = db_graph.vertices.find(m.db_vertex_id);
    if (db_it == db_graph.vertices.end()) {
      throw Error("build_factor_graph: inlier references unknown db vertex");
    }
    Constraint c;
    c.kind = Constraint::Kind::Matching;
    c.residual_dim = 3;
    c.vertex_id = m.query_vertex_id;
    c.target = db_it->second.position;
    c.information = info_match;
    fg.constraints.push_back(std::move(c));
  }
  return fg;
}

StateIndex::StateIndex(const FactorGraph& fg) : num_poses(fg.num_poses), vertex_ids(fg.vertex_ids) {
  std::sort(vertex_ids.begin(), vertex_ids.end());
}

int StateIndex::vertex_offset(VertexId id) const {
  const auto it = std::lower_bound(vertex_ids.begin(), vertex_ids.end(), id);
  if (it == vertex_ids.end() || *it != id) throw Error("state index: unknown vertex id");
  return 6 * num_poses + 3 * static_cast<int>(it - vertex_ids.begin());
}

VecXd constraint_residual(const Constraint& c, const BackendState& state) {
  switch (c.kind) {
    case Constraint::Kind::Matching: {
      return state.vertex_positions.at(c.vertex_id) - c.target;
    }
    case Constraint::Kind::RobotToVertex: {
      const Posed& pose = state.poses.at(c.pose_index);
      const Vec3d local =
          pose.rotation.conjugate() * (state.vertex_positions.at(c.vertex_id) - pose.translation);
      return local - c.target;
    }
    case Constraint::Kind::Odometry: {
      const Posed& a = state.poses.at(c.pose_index);
      const Posed& b = state.poses.at(c.pose_index2);
      Vec6d r;
      r.head<3>() = a.rotation.conjugate() * (b.translation - a.translation) -
                    c.relative_pose.translation;
      const Mat3d err_rot = c.relative_pose.matrix().transpose() *
                            (a.rotation.conjugate() * b.rotation).toRotationMatrix();
      r.tail<3>() = log_so3<double>(err_rot);
      return r;
    }
  }
  throw Error("constraint_residual: unknown kind");
}

MatXd constraint_jacobian(const Constraint& c, const BackendState& state, const StateIndex& index) {
  MatXd jac = MatXd::Zero(c.residual_dim, index.dimension());
  switch (c.kind) {
    case Constraint::Kind::Matching: {
      jac.block<3, 3>(0, index.vertex_offset(c.vertex_id)) = Mat3d::Identity();
      break;
    }
    case Constraint::Kind::RobotToVertex: {
      const Posed& pose = state.poses.at(c.pose_index);
      const Mat3d rot_t = pose.matrix().transpose();
      const Vec3d local = rot_t * (state.vertex_positions.at(c.vertex_id) - pose.translation);
      const int p = index.pose_offset(c.pose_index);
      jac.block<3, 3>(0, p) = -Mat3d::Identity();      // d e / d tau
      jac.block<3, 3>(0, p + 3) = hat<double>(local);  // d e / d phi
      jac.block<3, 3>(0, index.vertex_offset(c.vertex_id)) = rot_t;
      break;
    }
    case Constraint::Kind::Odometry: {
      const Posed& a = state.poses.at(c.pose_index);
      const Posed& b = state.poses.at(c.pose_index2);
      const Mat3d rot_a_t = a.matrix().transpose();
      const Vec3d delta_local = rot_a_t * (b.translation - a.translation);
      const Mat3d err_rot = c.relative_pose.matrix().transpose() *
                            (a.rotation.conjugate() * b.rotation).toRotationMatrix();
      const Vec3d r_rot = log_so3<double>(err_rot);
      const Mat3d jr_inv = right_jacobian_inv_so3<double>(r_rot);
      const Mat3d rot_z_t = c.relative_pose.matrix().transpose();

      const int pa = index.pose_offset(c.pose_index);
      const int pb = index.pose_offset(c.pose_index2);
      jac.block<3, 3>(0, pa) = -Mat3d::Identity();
      jac.block<3, 3>(0, pa + 3) = hat<double>(delta_local);
      jac.block<3, 3>(0, pb) = rot_a_t * b.matrix();
      // rotation residual rows
      jac.block<3, 3>(3, pa + 3) = -jr_inv.transpose() * rot_z_t;
      jac.block<3, 3>(3, pb + 3) = jr_inv;
      break;
    }
  }
  return jac;
}

BackendState retract_state(const BackendState& state, const VecXd& delta, const StateIndex& index) {
  BackendState out = state;
  for (int i = 0; i < index.num_poses; ++i) {
    out.poses[i] = state.poses[i].retract(delta.segment<6>(index.pose_offset(i)));
  }
  for (const VertexId id : index.vertex_ids) {
    out.vertex_positions[id] += delta.segment<3>(index.vertex_offset(id));
  }
  return out;
}

double objective_value(const FactorGraph& fg, const BackendState& state) {
  double total = 0.0;
  for (const Constraint& c : fg.constraints) {
    const VecXd e = constraint_residual(c, state);
    total += e.dot(c.information * e);
  }
  return total;
}

namespace {

int total_residual_dim(const FactorGraph& fg) {
  int rows = 0;
  for (const Constraint& c : fg.constraints) rows += c.residual_dim;
  return rows;
}

}  // namespace

LocalizationEstimate optimize(const FactorGraph& fg, const BackendState& init,
                              const OptimizeOptions& options) {
  const StateIndex index(fg);
  if (static_cast<int>(init.poses.size()) != fg.num_poses) {
    throw Error("optimize: init does not cover all poses");
  }
  for (const VertexId id : index.vertex_ids) {
    if (!init.vertex_positions.count(id)) throw Error("optimize: init does not cover all vertices");
  }

  // Whitening factors L^T with Omega = L L^T, so |L^T e|^2 = e^T Omega e.
  std::vector<MatXd> whiteners;
  whiteners.reserve(fg.constraints.size());
  for (const Constraint& c : fg.constraints) {
    Eigen::LLT<MatXd> llt(c.information);
    if (llt.info() != Eigen::Success) {
      throw Error("optimize: constraint information matrix is not positive-definite");
    }
    whiteners.push_back(MatXd(llt.matrixL()).transpose());
  }

  const int dim = index.dimension();
  const int rows = total_residual_dim(fg);
  BackendState state = init;
  double objective = objective_value(fg, state);

  LocalizationEstimate result;
  result.converged = false;
  result.iterations = 0;

  MatXd jacobian(rows, dim);
  VecXd residual(rows);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    jacobian.setZero();
    int row = 0;
    for (size_t k = 0; k < fg.constraints.size(); ++k) {
      const Constraint& c = fg.constraints[k];
      residual.segment(row, c.residual_dim) = whiteners[k] * constraint_residual(c, state);
      jacobian.middleRows(row, c.residual_dim) =
          whiteners[k] * constraint_jacobian(c, state, index);
      row += c.residual_dim;
    }
    const VecXd gradient = jacobian.transpose() * residual;
    if (gradient.lpNorm<Eigen::Infinity>() < 1e-14) {
      result.converged = true;
      break;
    }

    MatXd hessian = jacobian.transpose() * jacobian;
    VecXd step;
    bool solved = false;
    for (int attempt = 0; attempt < 2 && !solved; ++attempt) {
      if (attempt == 1) hessian.diagonal().array() += 1e-9;
      const Eigen::LDLT<MatXd> ldlt(hessian);
      if (ldlt.info() != Eigen::Success) continue;
      step = ldlt.solve(-gradient);
      if (!step.allFinite()) continue;
      const double solve_residual = (hessian * step + gradient).norm();
      if (solve_residual <= 1e-8 * std::max(1.0, gradient.norm())) solved = true;
    }
    if (!solved) {
      throw UnderdeterminedError("underdetermined: normal equations stay singular");
    }

    // Step halving keeps the objective non-increasing.
    double alpha = 1.0;
    bool accepted = false;
    BackendState candidate;
    double candidate_objective = objective;
    for (int halving = 0; halving <= 10; ++halving) {
      candidate = retract_state(state, alpha * step, index);
      candidate_objective = objective_value(fg, candidate);
      if (candidate_objective <= objective) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++result.iterations;
    if (!accepted) {
      result.converged = true;  // no decrease possible along the GN direction
      break;
    }
    const double decrease = objective - candidate_objective;
    state = std::move(candidate);
    objective = candidate_objective;
    if (decrease <= options.tolerance * std::max(objective + decrease, 1e-300)) {
      result.converged = true;
      break;
    }
  }

  result.poses = state.poses;
  result.vertex_positions = state.vertex_positions;
  result.final_objective = objective;
  return result;
}

BackendState initialize_state(const SemanticGraph& query_graph,
                              const std::vector<MatchCandidate>& inliers,
                              const std::map<VertexId, Vec3d>& db_positions,
                              const std::vector<Posed>& odometry,
                              const Posed& consensus_transform) {
  if (inliers.empty()) throw InsufficientMatchesError("initialize_state: empty inlier list");
  if (odometry.empty()) throw Error("initialize_state: no odometry poses");

  Vec3d mean = Vec3d::Zero();
  for (const MatchCandidate& c : inliers) mean += db_positions.at(c.db_vertex_id);
  mean /= static_cast<double>(inliers.size());

  const Posed& latest_odom = odometry.back();
  const Posed latest(consensus_transform.rotation * latest_odom.rotation, mean);
  const Posed latest_odom_inv = latest_odom.inverse();

  BackendState state;
  state.poses.reserve(odometry.size());
  for (const Posed& o : odometry) state.poses.push_back(latest * (latest_odom_inv * o));
  for (const auto& [id, v] : query_graph.vertices) {
    state.vertex_positions[id] = consensus_transform * v.position;
  }
  return state;
}

std::map<VertexId, Vec3d> vertex_positions_of(const SemanticGraph& graph) {
  std::map<VertexId, Vec3d> out;
  for (const auto& [id, v] : graph.vertices) out.emplace(id, v.position);
  return out;
}

}  // namespace semloc
