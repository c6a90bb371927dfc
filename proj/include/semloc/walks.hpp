#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "semloc/graph.hpp"
#include "semloc/types.hpp"

namespace semloc {

struct WalkParams {
  int num_walks = 200;  // n
  int walk_depth = 4;   // m
  bool forbid_backtrack = true;
  bool dedupe_walks = false;
  std::uint64_t rng_seed = 17;
};

/// n x m matrix of class-label sequences from random walks seeded at one
/// vertex. Rows hold the classes of the m visited vertices (the seed's own
/// class is kept separately) and are stored sorted lexicographically, with
/// per-row hashes precomputed for matching.
struct WalkDescriptor {
  ClassId seed_class = 0;
  int depth = 0;  // m
  std::vector<std::vector<ClassId>> rows;
  std::vector<std::uint64_t> row_hashes;
  bool degenerate = false;  // isolated seed: every row repeats seed_class

  int num_walks() const { return static_cast<int>(rows.size()); }
};

using DescriptorMap = std::map<VertexId, WalkDescriptor>;

std::uint64_t hash_row(const std::vector<ClassId>& row);

/// Descriptor plus the vertex-id path of each generated walk (kept in
/// generation order, before row sorting). The traces exist so tests can
/// check that consecutive walk vertices are graph-adjacent.
struct TracedDescriptor {
  WalkDescriptor descriptor;
  std::vector<std::vector<VertexId>> traces;
};

/// Walks are drawn from a counter-based stream keyed by (rng_seed, vertex
/// id), so results do not depend on vertex processing order or thread count.
/// Next-vertex choice is uniform over the current neighbors; with
/// forbid_backtrack the immediately previous vertex is excluded unless it is
/// the only neighbor. A vertex with no admissible neighbor repeats its class
/// for the remaining steps. With dedupe_walks, duplicate rows are re-drawn up
/// to a retry budget of 4n extra draws, then the remaining slots are padded
/// by cycling the accepted rows.
TracedDescriptor describe_vertex_traced(const std::map<VertexId, std::vector<VertexId>>& adjacency,
                                        const std::map<VertexId, Vertex>& vertices,
                                        VertexId vertex_id, const WalkParams& params);

WalkDescriptor describe_vertex(const SemanticGraph& graph, VertexId vertex_id,
                               const WalkParams& params);

/// Descriptors for every vertex; embarrassingly parallel and independent of
/// iteration order.
DescriptorMap describe_graph(const SemanticGraph& graph, const WalkParams& params,
                             int threads = 1);

/// Rebuild descriptors from serialized per-vertex walk rows (the graph
/// provides seed classes and degrees) and the reverse for serialization.
DescriptorMap descriptors_from_rows(const SemanticGraph& graph,
                                    const std::map<VertexId, std::vector<std::vector<ClassId>>>& rows);
std::map<VertexId, std::vector<std::vector<ClassId>>> rows_from_descriptors(
    const DescriptorMap& descriptors);

}  // namespace semloc
