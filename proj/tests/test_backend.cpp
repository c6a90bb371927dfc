#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "semloc/backend.hpp"
#include "semloc/errors.hpp"
#include "semloc/rng.hpp"
#include "synthetic.hpp"

using namespace semloc;

namespace {

std::vector<Vec3d> random_points(int n, Rng& rng, double span = 20.0) {
  std::vector<Vec3d> pts;
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(rng.uniform(0, span), rng.uniform(0, span), rng.uniform(0, span));
  }
  return pts;
}

BackendState truth_state(const synthetic::Problem& p) {
  BackendState state;
  state.poses = p.gt_poses;
  for (const auto& [id, v] : p.query.vertices) {
    state.vertex_positions[id] = p.odom_to_world * v.position;
  }
  return state;
}

// Plain gradient descent on the same tangent parameterization, with numeric
// central-difference gradients and a backtracking line search. Slow but
// entirely independent of the Gauss-Newton path and its analytic Jacobians.
double gradient_descent_objective(const FactorGraph& fg, const BackendState& init,
                                  int max_iterations) {
  const StateIndex index(fg);
  const int dim = index.dimension();
  BackendState state = init;
  double objective = objective_value(fg, state);
  double step = 1.0;
  const double h = 1e-7;
  for (int iter = 0; iter < max_iterations; ++iter) {
    VecXd gradient(dim);
    for (int k = 0; k < dim; ++k) {
      VecXd delta = VecXd::Zero(dim);
      delta(k) = h;
      const double plus = objective_value(fg, retract_state(state, delta, index));
      delta(k) = -h;
      const double minus = objective_value(fg, retract_state(state, delta, index));
      gradient(k) = (plus - minus) / (2.0 * h);
    }
    const double gnorm = gradient.norm();
    if (gnorm < 1e-12) break;
    double alpha = step / gnorm;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving) {
      const BackendState candidate = retract_state(state, VecXd(-alpha * gradient), index);
      const double value = objective_value(fg, candidate);
      if (value < objective) {
        state = candidate;
        objective = value;
        step = alpha * gnorm * 2.0;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  return objective;
}

}  // namespace

TEST_CASE("rigid transform: identity and pure translation") {
  Rng rng(60);
  const auto pts = random_points(10, rng);
  const Posed identity = estimate_rigid_transform(pts, pts);
  CHECK(identity.is_approx(Posed::Identity(), 1e-12));

  std::vector<Vec3d> shifted = pts;
  for (auto& p : shifted) p += Vec3d(1, 2, 3);
  const Posed t = estimate_rigid_transform(pts, shifted);
  CHECK((t.translation - Vec3d(1, 2, 3)).norm() < 1e-9);
  CHECK(t.rotation.angularDistance(Quatd::Identity()) < 1e-9);
}

TEST_CASE("rigid transform recovers random rigid motions exactly") {
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const Posed truth = synthetic::random_pose(rng, 15.0);
    const auto q = random_points(10, rng);
    std::vector<Vec3d> d;
    for (const auto& p : q) d.push_back(truth * p);
    const Posed fit = estimate_rigid_transform(q, d);
    CHECK(fit.is_approx(truth, 1e-9));
  }
}

TEST_CASE("rigid transform under noise matches the Horn oracle") {
  Rng rng(62);
  for (int trial = 0; trial < 25; ++trial) {
    const Posed truth = synthetic::random_pose(rng, 15.0);
    const auto q = random_points(12, rng);
    std::vector<Vec3d> d;
    for (const auto& p : q) {
      d.push_back(truth * p + 0.1 * Vec3d(rng.normal(), rng.normal(), rng.normal()));
    }
    const Posed ours = estimate_rigid_transform(q, d);
    const Posed horn = oracle::horn_rigid_transform(q, d);
    CHECK((ours.translation - horn.translation).norm() < 1e-8);
    CHECK(ours.rotation.angularDistance(horn.rotation) < 1e-8);

    // Both minimize the same least squares; residuals must agree.
    double r_ours = 0.0, r_horn = 0.0;
    for (size_t i = 0; i < q.size(); ++i) {
      r_ours += (ours * q[i] - d[i]).squaredNorm();
      r_horn += (horn * q[i] - d[i]).squaredNorm();
    }
    CHECK(r_ours == doctest::Approx(r_horn).epsilon(1e-10));
  }
}

TEST_CASE("rigid transform rejects degenerate configurations") {
  CHECK_THROWS_AS(estimate_rigid_transform({{0, 0, 0}, {1, 0, 0}}, {{0, 0, 0}, {1, 0, 0}}),
                  DegenerateError);
  // Collinear points leave a rotation ambiguity.
  std::vector<Vec3d> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK_THROWS_AS(estimate_rigid_transform(line, line), DegenerateError);
}

TEST_CASE("ransac keeps every match on clean data and recovers the transform") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    synthetic::ProblemSpec spec;
    spec.num_vertices = 9;
    spec.num_poses = 1;
    const auto p = synthetic::make_problem(seed, spec);
    const auto result = ransac_filter(p.matches, vertex_positions_of(p.query),
                                      vertex_positions_of(p.db), 0.5, 200, seed);
    CHECK(result.inliers.size() == 9);
    CHECK(result.consensus.is_approx(p.odom_to_world, 1e-9));
    CHECK(result.max_inlier_residual < 1e-9);
  }
}

TEST_CASE("ransac finds exactly the rigid subset among scattered outliers") {
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    synthetic::ProblemSpec spec;
    spec.num_vertices = 10;
    spec.num_poses = 1;
    spec.outlier_fraction = 0.3;
    const auto p = synthetic::make_problem(seed, spec);
    REQUIRE(p.outlier_count == 3);
    const auto result = ransac_filter(p.matches, vertex_positions_of(p.query),
                                      vertex_positions_of(p.db), 0.5, 500, seed * 7 + 1);
    bool exact = result.inliers.size() == 7;
    for (const auto& c : result.inliers) {
      if (c.query_vertex_id != c.db_vertex_id) exact = false;
    }
    successes += exact ? 1 : 0;
  }
  CHECK(successes >= 99);
}

TEST_CASE("ransac inliers satisfy the consistency bound under the returned transform") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    synthetic::ProblemSpec spec;
    spec.num_vertices = 12;
    spec.num_poses = 1;
    spec.position_noise = 0.5;
    spec.outlier_fraction = 0.25;
    const auto p = synthetic::make_problem(seed, spec);
    const double t_c = 2.0;
    const auto result = ransac_filter(p.matches, vertex_positions_of(p.query),
                                      vertex_positions_of(p.db), t_c, 300, seed);
    const auto qpos = vertex_positions_of(p.query);
    const auto dpos = vertex_positions_of(p.db);
    double max_residual = 0.0;
    for (const auto& c : result.inliers) {
      const double r =
          (result.consensus * qpos.at(c.query_vertex_id) - dpos.at(c.db_vertex_id)).norm();
      CHECK(r <= t_c);
      max_residual = std::max(max_residual, r);
    }
    CHECK(result.max_inlier_residual == doctest::Approx(max_residual));
  }
}

TEST_CASE("ransac is deterministic given the seed and errors on short input") {
  synthetic::ProblemSpec spec;
  spec.num_vertices = 8;
  spec.num_poses = 1;
  spec.position_noise = 0.3;
  const auto p = synthetic::make_problem(3, spec);
  const auto a = ransac_filter(p.matches, vertex_positions_of(p.query),
                               vertex_positions_of(p.db), 1.0, 100, 42);
  const auto b = ransac_filter(p.matches, vertex_positions_of(p.query),
                               vertex_positions_of(p.db), 1.0, 100, 42);
  REQUIRE(a.inliers.size() == b.inliers.size());
  CHECK(a.consensus.is_approx(b.consensus, 0.0));

  MatchSet two;
  two.k = 1;
  two.candidates[0] = {{0, 0, 1.0}};
  two.candidates[1] = {{1, 1, 1.0}};
  CHECK_THROWS_AS(ransac_filter(two, vertex_positions_of(p.query), vertex_positions_of(p.db),
                                1.0, 100, 1),
                  InsufficientMatchesError);
}

TEST_CASE("factor graph counts constraints by kind") {
  synthetic::ProblemSpec spec;
  spec.num_vertices = 3;
  spec.num_poses = 1;
  const auto p = synthetic::make_problem(5, spec);
  const auto inliers = p.matches.flattened();
  const FactorGraph fg =
      build_factor_graph(p.query, inliers, p.db, p.odometry, BackendWeights{});
  int odo = 0, r2v = 0, match = 0;
  for (const auto& c : fg.constraints) {
    odo += c.kind == Constraint::Kind::Odometry ? 1 : 0;
    r2v += c.kind == Constraint::Kind::RobotToVertex ? 1 : 0;
    match += c.kind == Constraint::Kind::Matching ? 1 : 0;
  }
  CHECK(odo == 0);
  CHECK(r2v == 3);
  CHECK(match == 3);

  synthetic::ProblemSpec chain = spec;
  chain.num_poses = 5;
  const auto p5 = synthetic::make_problem(6, chain);
  const FactorGraph fg5 =
      build_factor_graph(p5.query, p5.matches.flattened(), p5.db, p5.odometry, BackendWeights{});
  int odo5 = 0;
  for (const auto& c : fg5.constraints) odo5 += c.kind == Constraint::Kind::Odometry ? 1 : 0;
  CHECK(odo5 == 4);

  CHECK_THROWS_AS(build_factor_graph(p.query, {}, p.db, p.odometry, BackendWeights{}),
                  InsufficientMatchesError);
}

TEST_CASE("residuals vanish at the generator's ground truth") {
  synthetic::ProblemSpec spec;
  spec.num_vertices = 6;
  spec.num_poses = 4;
  const auto p = synthetic::make_problem(7, spec);
  // Odometry measurements are exact relative motions of the truth, so the
  // whole objective is zero at the true state.
  const FactorGraph fg =
      build_factor_graph(p.query, p.matches.flattened(), p.db, p.odometry, BackendWeights{});
  CHECK(objective_value(fg, truth_state(p)) < 1e-16);
}

TEST_CASE("analytic Jacobians match central finite differences") {
  Rng rng(63);
  for (int trial = 0; trial < 10; ++trial) {
    synthetic::ProblemSpec spec;
    spec.num_vertices = 5;
    spec.num_poses = 3;
    spec.position_noise = 0.4;
    spec.odom_noise = 0.1;
    const auto p = synthetic::make_problem(100 + trial, spec);
    const FactorGraph fg =
        build_factor_graph(p.query, p.matches.flattened(), p.db, p.odometry, BackendWeights{});
    const StateIndex index(fg);

    // Random state nearby, not the optimum.
    BackendState state = truth_state(p);
    VecXd wiggle(index.dimension());
    for (int k = 0; k < wiggle.size(); ++k) wiggle(k) = rng.uniform(-0.3, 0.3);
    state = retract_state(state, wiggle, index);

    const double h = 1e-6;
    for (const Constraint& c : fg.constraints) {
      const MatXd analytic = constraint_jacobian(c, state, index);
      MatXd numeric(c.residual_dim, index.dimension());
      for (int k = 0; k < index.dimension(); ++k) {
        VecXd delta = VecXd::Zero(index.dimension());
        delta(k) = h;
        const VecXd plus = constraint_residual(c, retract_state(state, delta, index));
        delta(k) = -h;
        const VecXd minus = constraint_residual(c, retract_state(state, delta, index));
        numeric.col(k) = (plus - minus) / (2.0 * h);
      }
      const double scale = std::max(1.0, numeric.lpNorm<Eigen::Infinity>());
      CHECK((analytic - numeric).lpNorm<Eigen::Infinity>() / scale < 1e-5);
    }
  }
}

TEST_CASE("optimize converges immediately from the optimum of a zero-noise problem") {
  synthetic::ProblemSpec spec;
  spec.num_vertices = 6;
  spec.num_poses = 3;
  const auto p = synthetic::make_problem(8, spec);
  const FactorGraph fg =
      build_factor_graph(p.query, p.matches.flattened(), p.db, p.odometry, BackendWeights{});
  const LocalizationEstimate estimate = optimize(fg, truth_state(p), OptimizeOptions{});
  CHECK(estimate.converged);
  CHECK(estimate.iterations <= 1);
  CHECK(estimate.final_objective < 1e-12);
}

TEST_CASE("single pose pure translation offset is recovered") {
  synthetic::ProblemSpec spec;
  spec.num_vertices = 3;
  spec.num_poses = 1;
  const auto p = synthetic::make_problem(9, spec);
  const FactorGraph fg =
      build_factor_graph(p.query, p.matches.flattened(), p.db, p.odometry, BackendWeights{});
  BackendState init = truth_state(p);
  init.poses[0].translation += Vec3d(2.0, -1.5, 0.75);
  for (auto& [id, pos] : init.vertex_positions) pos += Vec3d(2.0, -1.5, 0.75);
  const LocalizationEstimate estimate = optimize(fg, init, OptimizeOptions{});
  CHECK((estimate.poses[0].translation - p.gt_poses[0].translation).norm() < 1e-6);
}

TEST_CASE("optimize matches a gradient-descent oracle on a noisy problem") {
  synthetic::ProblemSpec spec;
  spec.num_vertices = 4;
  spec.num_poses = 1;
  spec.position_noise = 0.3;
  const auto p = synthetic::make_problem(10, spec);
  BackendWeights uniform;
  uniform.sigma_odom_translation = 1.0;
  uniform.sigma_odom_rotation = 1.0;
  uniform.sigma_vertex = 1.0;
  uniform.sigma_match = 1.0;
  const FactorGraph fg =
      build_factor_graph(p.query, p.matches.flattened(), p.db, p.odometry, uniform);

  BackendState init = truth_state(p);
  init.poses[0].translation += Vec3d(0.5, -0.3, 0.2);

  OptimizeOptions options;
  options.tolerance = 1e-14;
  options.max_iterations = 100;
  const LocalizationEstimate ours = optimize(fg, init, options);
  const double oracle_objective = gradient_descent_objective(fg, init, 200000);
  CHECK(std::abs(ours.final_objective - oracle_objective) <
        1e-6 * std::max(1.0, oracle_objective));
  CHECK(ours.final_objective <= oracle_objective + 1e-9);
}

TEST_CASE("objective never increases from init") {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    synthetic::ProblemSpec spec;
    spec.num_vertices = 6;
    spec.num_poses = 3;
    spec.position_noise = 1.0;
    spec.odom_noise = 0.2;
    const auto p = synthetic::make_problem(seed, spec);
    const FactorGraph fg =
        build_factor_graph(p.query, p.matches.flattened(), p.db, p.odometry, BackendWeights{});
    BackendState init = truth_state(p);
    const double initial = objective_value(fg, init);
    const LocalizationEstimate estimate = optimize(fg, init, OptimizeOptions{});
    CHECK(estimate.final_objective <= initial + 1e-12);
  }
}

TEST_CASE("translating the database translates the estimate exactly") {
  synthetic::ProblemSpec spec;
  spec.num_vertices = 7;
  spec.num_poses = 2;
  const auto p = synthetic::make_problem(11, spec);
  const Vec3d shift(13.0, -4.0, 2.5);

  const auto solve = [&](const SemanticGraph& db) {
    const auto inliers = p.matches.flattened();
    const auto db_positions = vertex_positions_of(db);
    const auto ransac = ransac_filter(p.matches, vertex_positions_of(p.query), db_positions,
                                      1.0, 200, 5);
    const BackendState init =
        initialize_state(p.query, ransac.inliers, db_positions, p.odometry, ransac.consensus);
    const FactorGraph fg = build_factor_graph(p.query, ransac.inliers, db, p.odometry,
                                              BackendWeights{});
    return optimize(fg, init, OptimizeOptions{});
  };

  SemanticGraph shifted_db = p.db;
  for (auto& [id, v] : shifted_db.vertices) v.position += shift;

  const LocalizationEstimate base = solve(p.db);
  const LocalizationEstimate moved = solve(shifted_db);
  for (size_t i = 0; i < base.poses.size(); ++i) {
    CHECK((moved.poses[i].translation - base.poses[i].translation - shift).norm() < 1e-9);
    CHECK(moved.poses[i].rotation.angularDistance(base.poses[i].rotation) < 1e-9);
  }
}

TEST_CASE("initialize_state places the latest pose at the inlier mean") {
  synthetic::ProblemSpec spec;
  spec.num_vertices = 4;
  spec.num_poses = 2;
  const auto p = synthetic::make_problem(12, spec);
  const auto db_positions = vertex_positions_of(p.db);

  std::vector<MatchCandidate> single{{0, 0, 1.0}};
  BackendState s1 = initialize_state(p.query, single, db_positions, p.odometry, p.odom_to_world);
  CHECK((s1.poses.back().translation - db_positions.at(0)).norm() < 1e-12);

  std::vector<MatchCandidate> pair{{0, 0, 1.0}, {1, 1, 1.0}};
  BackendState s2 = initialize_state(p.query, pair, db_positions, p.odometry, p.odom_to_world);
  const Vec3d midpoint = 0.5 * (db_positions.at(0) + db_positions.at(1));
  CHECK((s2.poses.back().translation - midpoint).norm() < 1e-12);

  // Earlier poses follow the odometry chain from the latest pose.
  const Posed rel = p.odometry.back().inverse() * p.odometry.front();
  CHECK((s2.poses.front().translation - (s2.poses.back() * rel).translation).norm() < 1e-12);

  CHECK_THROWS_AS(initialize_state(p.query, {}, db_positions, p.odometry, p.odom_to_world),
                  InsufficientMatchesError);
}

TEST_CASE("underdetermined problems are reported") {
  // One pose observing a single vertex: rotation about the sight line is free.
  SemanticGraph query;
  Vertex v;
  v.id = 0;
  v.class_id = 1;
  v.position = Vec3d(1, 0, 0);
  v.observations.push_back({0, Vec3d(1, 0, 0)});
  query.vertices.emplace(0, v);
  query.next_vertex_id = 1;
  query.frame_poses.emplace_back(0, Posed::Identity());

  SemanticGraph db = query;
  const std::vector<MatchCandidate> inliers{{0, 0, 1.0}};
  const FactorGraph fg =
      build_factor_graph(query, inliers, db, {Posed::Identity()}, BackendWeights{});
  BackendState init;
  init.poses.push_back(Posed(Quatd::Identity(), Vec3d(0.1, 0.2, 0.0)));
  init.vertex_positions[0] = Vec3d(1.2, 0.1, 0.0);
  CHECK_THROWS_AS(optimize(fg, init, OptimizeOptions{}), UnderdeterminedError);
}
