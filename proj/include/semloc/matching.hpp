#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "semloc/graph.hpp"
#include "semloc/walks.hpp"

namespace semloc {

struct MatchCandidate {
  VertexId query_vertex_id = -1;
  VertexId db_vertex_id = -1;
  double score = 0.0;  // in [0, 1]
};

/// Up to k candidates per query vertex, sorted by descending score with ties
/// broken by ascending db vertex id. Query vertices with no positive-score
/// candidate carry an empty list.
struct MatchSet {
  int k = 0;
  std::map<VertexId, std::vector<MatchCandidate>> candidates;

  /// All candidates flattened in (query id, rank) order.
  std::vector<MatchCandidate> flattened() const;
};

/// Fraction of identical rows shared by two descriptors (multiset
/// intersection over the n rows). 0 when the seed classes differ; throws
/// ShapeMismatchError when (n, m) disagree. Rows are compared through their
/// precomputed hashes with full comparison on hash equality.
double similarity(const WalkDescriptor& a, const WalkDescriptor& b);

/// Scores every query vertex against all same-class database vertices and
/// keeps the top k positive-score candidates each.
MatchSet match_graphs(const SemanticGraph& query, const DescriptorMap& query_descriptors,
                      const SemanticGraph& db, const DescriptorMap& db_descriptors, int k);

/// CSV export: header "query_id,db_id,score", rows sorted by query id then rank.
std::string match_set_to_csv(const MatchSet& matches);
void save_match_set(const std::filesystem::path& path, const MatchSet& matches);

}  // namespace semloc
