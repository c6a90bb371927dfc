// Synthetic localization problems with known ground truth, shared by the
// backend tests and the acceptance suite.
#pragma once

#include <vector>

#include "semloc/backend.hpp"
#include "semloc/graph.hpp"
#include "semloc/matching.hpp"
#include "semloc/rng.hpp"

namespace semloc::synthetic {

struct Problem {
  SemanticGraph db;               // vertex positions in the world frame
  SemanticGraph query;            // positions in the odometry frame, with observations
  std::vector<Posed> gt_poses;    // true robot poses, world frame
  std::vector<Posed> odometry;    // odometry estimates (odometry frame)
  Posed odom_to_world;            // ground-truth alignment of the two frames
  MatchSet matches;               // one candidate per query vertex
  int outlier_count = 0;
};

struct ProblemSpec {
  int num_vertices = 8;
  int num_poses = 3;
  double span = 60.0;               // world size the vertices occupy
  double position_noise = 0.0;      // sigma on query vertex positions, meters
  double odom_noise = 0.0;          // sigma on per-step odometry translation
  double outlier_fraction = 0.0;    // fraction of matches pointed at wrong vertices
  int num_classes = 3;
};

inline Posed random_pose(Rng& rng, double span) {
  const Vec3d w(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  const Vec3d t(rng.uniform(0.0, span), rng.uniform(0.0, span), rng.uniform(0.0, 0.2 * span));
  return Posed(exp_so3<double>(w), t);
}

inline Problem make_problem(std::uint64_t seed, const ProblemSpec& spec) {
  Rng rng(mix_seed(seed, 0x5e7aULL));
  Problem p;
  p.odom_to_world = random_pose(rng, 10.0);
  const Posed world_to_odom = p.odom_to_world.inverse();

  // Database vertices scattered in the world; extra unmatched vertices make
  // outlier targets meaningful.
  const int db_extra = 2 * spec.num_classes;  // every class has spare vertices
  for (int i = 0; i < spec.num_vertices + db_extra; ++i) {
    Vertex v;
    v.id = i;
    v.class_id = 1 + i % spec.num_classes;
    v.position = Vec3d(rng.uniform(0.0, spec.span), rng.uniform(0.0, spec.span),
                       rng.uniform(0.0, 10.0));
    p.db.vertices.emplace(i, v);
  }
  p.db.next_vertex_id = spec.num_vertices + db_extra;

  // Robot path through the world.
  for (int i = 0; i < spec.num_poses; ++i) {
    const double frac = spec.num_poses == 1 ? 0.5 : static_cast<double>(i) / (spec.num_poses - 1);
    const Vec3d t(0.2 * spec.span + 0.6 * spec.span * frac, 0.5 * spec.span, 1.5);
    const Mat3d rot = exp_so3<double>(Vec3d(0.0, 0.0, rng.uniform(-0.3, 0.3)));
    p.gt_poses.emplace_back(rot, t);
  }

  // Odometry: ground truth mapped into the odometry frame, with optional
  // integrated drift.
  for (int i = 0; i < spec.num_poses; ++i) {
    if (i == 0) {
      p.odometry.push_back(world_to_odom * p.gt_poses[0]);
      continue;
    }
    Posed rel = p.gt_poses[i - 1].inverse() * p.gt_poses[i];
    if (spec.odom_noise > 0.0) {
      rel.translation += spec.odom_noise * Vec3d(rng.normal(), rng.normal(), rng.normal());
    }
    p.odometry.push_back(p.odometry.back() * rel);
  }

  // Query vertices: the first num_vertices db vertices, observed from every
  // pose, positions reconstructed in the odometry frame.
  p.matches.k = 1;
  for (int i = 0; i < spec.num_vertices; ++i) {
    const Vertex& db_vertex = p.db.vertices.at(i);
    Vertex q;
    q.id = i;
    q.class_id = db_vertex.class_id;
    Vec3d world_pos = db_vertex.position;
    if (spec.position_noise > 0.0) {
      world_pos += spec.position_noise * Vec3d(rng.normal(), rng.normal(), rng.normal());
    }
    q.position = world_to_odom * world_pos;
    for (int f = 0; f < spec.num_poses; ++f) {
      q.observations.push_back({f, p.gt_poses[f].inverse() * world_pos});
    }
    p.query.vertices.emplace(i, q);
    p.matches.candidates[i] = {{i, i, 1.0}};
  }
  p.query.next_vertex_id = spec.num_vertices;
  for (int f = 0; f < spec.num_poses; ++f) p.query.frame_poses.emplace_back(f, p.odometry[f]);

  // Outliers: rewire a subset of matches to a wrong same-class db vertex, so
  // the match set keeps its same-class invariant.
  const int outliers = static_cast<int>(spec.outlier_fraction * spec.num_vertices);
  while (p.outlier_count < outliers) {
    const int victim = static_cast<int>(rng.uniform_index(spec.num_vertices));
    if (p.matches.candidates[victim][0].db_vertex_id != victim) continue;
    const ClassId cls = p.db.vertices.at(victim).class_id;
    int wrong = victim;
    while (wrong == victim || p.db.vertices.at(wrong).class_id != cls) {
      wrong = static_cast<int>(rng.uniform_index(spec.num_vertices + db_extra));
    }
    p.matches.candidates[victim][0].db_vertex_id = wrong;
    ++p.outlier_count;
  }
  return p;
}

}  // namespace semloc::synthetic
