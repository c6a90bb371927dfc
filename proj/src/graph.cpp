#include "semloc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "semloc/errors.hpp"
#include "semloc/io_util.hpp"

namespace semloc {

int SemanticGraph::degree(VertexId v) const {
  int d = 0;
  for (const auto& e : edges) d += (e.first == v || e.second == v) ? 1 : 0;
  return d;
}

std::map<VertexId, std::vector<VertexId>> SemanticGraph::adjacency() const {
  std::map<VertexId, std::vector<VertexId>> adj;
  for (const auto& [id, v] : vertices) adj[id];
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& [id, neighbors] : adj) std::sort(neighbors.begin(), neighbors.end());
  return adj;
}

namespace {

SemanticGraph build_graph_impl(const std::vector<Blob>& blobs, double threshold, bool image_space,
                               const Posed& odom_pose, int frame_index) {
  if (!(threshold > 0.0)) throw Error("graph: proximity threshold must be positive");
  SemanticGraph g;
  g.frame_poses.emplace_back(frame_index, odom_pose);
  const Posed world_to_robot = odom_pose.inverse();
  for (const Blob& blob : blobs) {
    Vertex v;
    v.id = g.next_vertex_id++;
    v.class_id = blob.class_id;
    v.position = blob.center_3d;
    v.observations.push_back({frame_index, world_to_robot * blob.center_3d});
    g.vertices.emplace(v.id, std::move(v));
  }
  const int n = static_cast<int>(blobs.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double dist;
      if (image_space) {
        dist = (blobs[i].center_px - blobs[j].center_px).cast<double>().norm();
      } else {
        dist = (blobs[i].center_3d - blobs[j].center_3d).norm();
      }
      if (dist <= threshold) g.add_edge(i, j);
    }
  }
  return g;
}

}  // namespace

SemanticGraph build_frame_graph(const std::vector<Blob>& blobs, double edge_distance,
                                const Posed& odom_pose, int frame_index) {
  return build_graph_impl(blobs, edge_distance, false, odom_pose, frame_index);
}

SemanticGraph build_image_space_graph(const std::vector<Blob>& blobs, double pixel_edge_distance,
                                      const Posed& odom_pose, int frame_index) {
  return build_graph_impl(blobs, pixel_edge_distance, true, odom_pose, frame_index);
}

void merge_frame(SemanticGraph& target, const SemanticGraph& frame_graph, double merge_distance,
                 double edge_distance) {
  if (!(merge_distance > 0.0)) throw Error("merge_frame: merge_distance must be positive");

  std::map<VertexId, VertexId> remap;  // incoming id -> id in target
  for (const auto& [in_id, in_vertex] : frame_graph.vertices) {
    // Nearest existing same-class vertex within merge_distance; ties by id.
    VertexId best_id = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& [id, v] : target.vertices) {
      if (v.class_id != in_vertex.class_id) continue;
      const double d = (v.position - in_vertex.position).norm();
      if (d <= merge_distance && d < best_dist) {
        best_dist = d;
        best_id = id;
      }
    }
    if (best_id >= 0) {
      Vertex& host = target.vertices.at(best_id);
      host.observations.insert(host.observations.end(), in_vertex.observations.begin(),
                               in_vertex.observations.end());
      remap[in_id] = best_id;
    } else {
      Vertex fresh = in_vertex;
      fresh.id = target.next_vertex_id++;
      remap[in_id] = fresh.id;
      for (const auto& [id, v] : target.vertices) {
        if (id != fresh.id && (v.position - fresh.position).norm() <= edge_distance) {
          target.add_edge(fresh.id, id);
        }
      }
      target.vertices.emplace(fresh.id, std::move(fresh));
    }
  }
  for (const auto& [a, b] : frame_graph.edges) target.add_edge(remap.at(a), remap.at(b));
  for (const auto& fp : frame_graph.frame_poses) target.frame_poses.push_back(fp);
}

void WindowedGraphBuilder::push_frame(const SemanticGraph& frame_graph) {
  merge_frame(graph_, frame_graph, merge_distance_, edge_distance_);
  if (window_frames_ > 0) {
    while (static_cast<int>(graph_.frame_poses.size()) > window_frames_) {
      evict_frame(graph_.frame_poses.front().first);
    }
  }
}

void WindowedGraphBuilder::evict_frame(int frame_index) {
  graph_.frame_poses.erase(
      std::remove_if(graph_.frame_poses.begin(), graph_.frame_poses.end(),
                     [&](const auto& fp) { return fp.first == frame_index; }),
      graph_.frame_poses.end());

  std::vector<VertexId> dead;
  for (auto& [id, v] : graph_.vertices) {
    auto& obs = v.observations;
    obs.erase(std::remove_if(obs.begin(), obs.end(),
                             [&](const Observation& o) { return o.frame_index == frame_index; }),
              obs.end());
    if (obs.empty()) dead.push_back(id);
  }
  for (const VertexId id : dead) {
    graph_.vertices.erase(id);
    for (auto it = graph_.edges.begin(); it != graph_.edges.end();) {
      it = (it->first == id || it->second == id) ? graph_.edges.erase(it) : std::next(it);
    }
  }
}

std::string graph_to_json(const SemanticGraph& graph,
                          const std::map<VertexId, std::vector<std::vector<ClassId>>>* walks) {
  std::string out = "{\n \"vertices\": [";
  bool first = true;
  for (const auto& [id, v] : graph.vertices) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "  {\"id\": " + std::to_string(id) + ", \"class\": " + std::to_string(v.class_id) +
           ", \"pos\": [" + format_double(v.position.x()) + ", " + format_double(v.position.y()) +
           ", " + format_double(v.position.z()) + "]";
    if (walks != nullptr) {
      const auto it = walks->find(id);
      if (it != walks->end()) {
        out += ", \"walks\": [";
        for (size_t r = 0; r < it->second.size(); ++r) {
          out += r == 0 ? "[" : ", [";
          const auto& row = it->second[r];
          for (size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += ", ";
            out += std::to_string(row[c]);
          }
          out += "]";
        }
        out += "]";
      }
    }
    out += "}";
  }
  out += "\n ],\n \"edges\": [";
  first = true;
  for (const auto& [a, b] : graph.edges) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "  [" + std::to_string(a) + ", " + std::to_string(b) + "]";
  }
  out += "\n ]\n}\n";
  return out;
}

SemanticGraph graph_from_json(const std::string& text,
                              std::map<VertexId, std::vector<std::vector<ClassId>>>* walks) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("graph JSON parse error: ") + e.what());
  }
  SemanticGraph g;
  try {
    for (const auto& jv : j.at("vertices")) {
      Vertex v;
      v.id = jv.at("id").get<int>();
      v.class_id = jv.at("class").get<int>();
      const auto& pos = jv.at("pos");
      if (pos.size() != 3) throw IoError("graph JSON: pos must have 3 entries");
      v.position = Vec3d(pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>());
      if (walks != nullptr && jv.contains("walks")) {
        auto& rows = (*walks)[v.id];
        for (const auto& jrow : jv.at("walks")) {
          rows.emplace_back();
          for (const auto& x : jrow) rows.back().push_back(x.get<int>());
        }
      }
      if (!g.vertices.emplace(v.id, v).second) throw IoError("graph JSON: duplicate vertex id");
      g.next_vertex_id = std::max(g.next_vertex_id, v.id + 1);
    }
    for (const auto& je : j.at("edges")) {
      if (je.size() != 2) throw IoError("graph JSON: edge must have 2 entries");
      const int a = je[0].get<int>();
      const int b = je[1].get<int>();
      if (a == b || !g.vertices.count(a) || !g.vertices.count(b)) {
        throw IoError("graph JSON: edge references invalid vertices");
      }
      g.add_edge(a, b);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("graph JSON structure error: ") + e.what());
  }
  return g;
}

void save_graph(const std::filesystem::path& path, const SemanticGraph& graph,
                const std::map<VertexId, std::vector<std::vector<ClassId>>>* walks) {
  write_text_file_atomic(path, graph_to_json(graph, walks));
}

SemanticGraph load_graph(const std::filesystem::path& path,
                         std::map<VertexId, std::vector<std::vector<ClassId>>>* walks) {
  try {
    return graph_from_json(read_text_file(path), walks);
  } catch (const IoError& e) {
    throw IoError(std::string(e.what()) + " [" + path.string() + "]");
  }
}

}  // namespace semloc
