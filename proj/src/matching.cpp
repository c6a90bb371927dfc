#include "semloc/matching.hpp"

#include <algorithm>
#include <unordered_map>

#include "semloc/errors.hpp"
#include "semloc/io_util.hpp"

namespace semloc {

std::vector<MatchCandidate> MatchSet::flattened() const {
  std::vector<MatchCandidate> out;
  for (const auto& [qid, list] : candidates) out.insert(out.end(), list.begin(), list.end());
  return out;
}

namespace {

// Multiset of descriptor rows keyed by hash; collisions fall back to a full
// row comparison, so the count is exact. Row multiplicities live in a flat
// vector that scoring copies per call instead of the whole map.
struct RowMultiset {
  explicit RowMultiset(const WalkDescriptor& d) : desc(&d) {
    buckets.reserve(d.rows.size());
    for (size_t i = 0; i < d.rows.size(); ++i) {
      auto& entries = buckets[d.row_hashes[i]];
      bool found = false;
      for (const auto& [row_index, slot] : entries) {
        if (desc->rows[row_index] == d.rows[i]) {
          ++base_counts[slot];
          found = true;
          break;
        }
      }
      if (!found) {
        entries.emplace_back(i, base_counts.size());
        base_counts.push_back(1);
      }
    }
  }

  const WalkDescriptor* desc;
  std::unordered_map<std::uint64_t, std::vector<std::pair<size_t, size_t>>> buckets;
  std::vector<int> base_counts;
};

double score_against(const RowMultiset& query_rows, const WalkDescriptor& db) {
  std::vector<int> counts = query_rows.base_counts;  // consumed per call
  int shared = 0;
  for (size_t i = 0; i < db.rows.size(); ++i) {
    const auto it = query_rows.buckets.find(db.row_hashes[i]);
    if (it == query_rows.buckets.end()) continue;
    for (const auto& [row_index, slot] : it->second) {
      if (counts[slot] > 0 && query_rows.desc->rows[row_index] == db.rows[i]) {
        --counts[slot];
        ++shared;
        break;
      }
    }
  }
  return static_cast<double>(shared) / static_cast<double>(query_rows.desc->rows.size());
}

void check_shape(const WalkDescriptor& a, const WalkDescriptor& b) {
  if (a.num_walks() != b.num_walks() || a.depth != b.depth) {
    throw ShapeMismatchError("descriptor shape mismatch: (" + std::to_string(a.num_walks()) +
                             ", " + std::to_string(a.depth) + ") vs (" +
                             std::to_string(b.num_walks()) + ", " + std::to_string(b.depth) + ")");
  }
}

}  // namespace

double similarity(const WalkDescriptor& a, const WalkDescriptor& b) {
  check_shape(a, b);
  if (a.seed_class != b.seed_class) return 0.0;
  return score_against(RowMultiset(a), b);
}

MatchSet match_graphs(const SemanticGraph& query, const DescriptorMap& query_descriptors,
                      const SemanticGraph& db, const DescriptorMap& db_descriptors, int k) {
  if (k < 1) throw Error("match_graphs: k must be >= 1");

  // Validate a uniform (n, m) across both graphs before any scoring.
  const WalkDescriptor* reference = nullptr;
  for (const auto& [id, d] : query_descriptors) {
    if (reference == nullptr) reference = &d;
    check_shape(*reference, d);
  }
  for (const auto& [id, d] : db_descriptors) {
    if (reference == nullptr) reference = &d;
    check_shape(*reference, d);
  }

  std::map<ClassId, std::vector<VertexId>> db_by_class;
  for (const auto& [id, v] : db.vertices) db_by_class[v.class_id].push_back(id);

  MatchSet out;
  out.k = k;
  for (const auto& [qid, qv] : query.vertices) {
    auto& list = out.candidates[qid];
    const auto qd_it = query_descriptors.find(qid);
    if (qd_it == query_descriptors.end()) {
      throw Error("match_graphs: query vertex " + std::to_string(qid) + " has no descriptor");
    }
    const auto class_it = db_by_class.find(qv.class_id);
    if (class_it == db_by_class.end()) continue;

    const RowMultiset query_rows(qd_it->second);
    for (const VertexId db_id : class_it->second) {
      const auto dd_it = db_descriptors.find(db_id);
      if (dd_it == db_descriptors.end()) {
        throw Error("match_graphs: db vertex " + std::to_string(db_id) + " has no descriptor");
      }
      const double s = score_against(query_rows, dd_it->second);
      if (s > 0.0) list.push_back({qid, db_id, s});
    }
    std::sort(list.begin(), list.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.db_vertex_id < b.db_vertex_id;
    });
    if (static_cast<int>(list.size()) > k) list.resize(k);
  }
  return out;
}

std::string match_set_to_csv(const MatchSet& matches) {
  std::string out = "query_id,db_id,score\n";
  for (const auto& [qid, list] : matches.candidates) {
    for (const auto& c : list) {
      out += std::to_string(c.query_vertex_id) + "," + std::to_string(c.db_vertex_id) + "," +
             format_double(c.score) + "\n";
    }
  }
  return out;
}

void save_match_set(const std::filesystem::path& path, const MatchSet& matches) {
  write_text_file_atomic(path, match_set_to_csv(matches));
}

}  // namespace semloc
