#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "semloc/blobs.hpp"
#include "semloc/geometry.hpp"
#include "semloc/types.hpp"

namespace semloc {

/// One observation of a vertex: which frame saw it and where it sat in that
/// frame's camera/robot frame.
struct Observation {
  int frame_index = 0;
  Vec3d offset = Vec3d::Zero();
};

struct Vertex {
  VertexId id = 0;
  ClassId class_id = 0;
  Vec3d position = Vec3d::Zero();  // fixed at first observation
  std::vector<Observation> observations;
};

/// Undirected graph of semantic object observations. Edges are stored as
/// (smaller id, larger id) pairs; vertices are keyed by id so iteration order
/// is deterministic.
struct SemanticGraph {
  std::map<VertexId, Vertex> vertices;
  std::set<std::pair<VertexId, VertexId>> edges;
  std::vector<std::pair<int, Posed>> frame_poses;  // (frame_index, odometry pose)
  VertexId next_vertex_id = 0;

  bool has_edge(VertexId a, VertexId b) const {
    return edges.count(a < b ? std::make_pair(a, b) : std::make_pair(b, a)) > 0;
  }
  void add_edge(VertexId a, VertexId b) {
    if (a != b) edges.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
  }
  int degree(VertexId v) const;

  /// Sorted neighbor lists for every vertex.
  std::map<VertexId, std::vector<VertexId>> adjacency() const;
};

/// One vertex per blob at its 3D center; edges between all pairs at Euclidean
/// distance <= edge_distance. Vertex ids are 0..n-1 in blob order.
SemanticGraph build_frame_graph(const std::vector<Blob>& blobs, double edge_distance,
                                const Posed& odom_pose = Posed::Identity(), int frame_index = 0);

/// Same construction but with proximity tested on pixel centroid distances.
SemanticGraph build_image_space_graph(const std::vector<Blob>& blobs, double pixel_edge_distance,
                                      const Posed& odom_pose = Posed::Identity(),
                                      int frame_index = 0);

/// Merge a frame graph into target. Incoming vertices within merge_distance
/// of an existing same-class vertex fuse into it (nearest wins, ties by lower
/// id) and the existing position is kept; everything else is inserted with a
/// fresh id and connected to all vertices within edge_distance. Incoming
/// edges are re-targeted through the merge mapping.
void merge_frame(SemanticGraph& target, const SemanticGraph& frame_graph, double merge_distance,
                 double edge_distance);

/// Incrementally assembles a graph from per-frame graphs. With a positive
/// window size, frames older than the window are evicted: their observations
/// are removed and vertices left with no in-window observation disappear with
/// their edges. window_frames <= 0 disables eviction (database mode).
class WindowedGraphBuilder {
 public:
  WindowedGraphBuilder(int window_frames, double merge_distance, double edge_distance)
      : window_frames_(window_frames),
        merge_distance_(merge_distance),
        edge_distance_(edge_distance) {}

  void push_frame(const SemanticGraph& frame_graph);

  const SemanticGraph& graph() const { return graph_; }
  int frames_in_window() const { return static_cast<int>(graph_.frame_poses.size()); }

 private:
  void evict_frame(int frame_index);

  int window_frames_;
  double merge_distance_;
  double edge_distance_;
  SemanticGraph graph_;
};

/// Canonical JSON form: vertex ids ascending, edge pairs smaller-id first,
/// edges sorted lexicographically. Descriptor rows ride along as an optional
/// per-vertex "walks" field. Byte-stable across reruns.
std::string graph_to_json(const SemanticGraph& graph,
                          const std::map<VertexId, std::vector<std::vector<ClassId>>>* walks = nullptr);
SemanticGraph graph_from_json(const std::string& text,
                              std::map<VertexId, std::vector<std::vector<ClassId>>>* walks = nullptr);

void save_graph(const std::filesystem::path& path, const SemanticGraph& graph,
                const std::map<VertexId, std::vector<std::vector<ClassId>>>* walks = nullptr);
SemanticGraph load_graph(const std::filesystem::path& path,
                         std::map<VertexId, std::vector<std::vector<ClassId>>>* walks = nullptr);

}  // namespace semloc
