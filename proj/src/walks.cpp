#include "semloc/walks.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

#include "semloc/errors.hpp"
#include "semloc/rng.hpp"

namespace semloc {

std::uint64_t hash_row(const std::vector<ClassId>& row) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const ClassId c : row) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
    h *= 0x100000001b3ULL;
    h = splitmix64(h);
  }
  return h;
}

TracedDescriptor describe_vertex_traced(const std::map<VertexId, std::vector<VertexId>>& adjacency,
                                        const std::map<VertexId, Vertex>& vertices,
                                        VertexId vertex_id, const WalkParams& params) {
  if (params.num_walks < 1 || params.walk_depth < 1) {
    throw Error("walks: num_walks and walk_depth must be >= 1");
  }
  const auto vertex_it = vertices.find(vertex_id);
  if (vertex_it == vertices.end()) throw Error("walks: unknown vertex id");
  const auto adj_it = adjacency.find(vertex_id);
  const bool isolated = adj_it == adjacency.end() || adj_it->second.empty();

  const int n = params.num_walks;
  const int m = params.walk_depth;
  Rng rng(mix_seed(params.rng_seed, static_cast<std::uint64_t>(vertex_id)));

  const auto class_of = [&](VertexId id) { return vertices.at(id).class_id; };

  std::vector<std::vector<VertexId>> traces;
  std::vector<std::vector<ClassId>> rows;
  traces.reserve(n);
  rows.reserve(n);

  const auto draw_walk = [&](std::vector<VertexId>& trace, std::vector<ClassId>& row) {
    trace.clear();
    row.clear();
    VertexId prev = -1;
    VertexId cur = vertex_id;
    for (int step = 0; step < m; ++step) {
      const auto it = adjacency.find(cur);
      const std::vector<VertexId>* nb = it != adjacency.end() ? &it->second : nullptr;
      if (nb == nullptr || nb->empty()) {
        // No admissible neighbor: repeat this vertex's class for the rest.
        for (; step < m; ++step) {
          trace.push_back(cur);
          row.push_back(class_of(cur));
        }
        break;
      }
      VertexId next = -1;
      const bool skip_prev = params.forbid_backtrack && prev >= 0 && nb->size() > 1 &&
                             std::find(nb->begin(), nb->end(), prev) != nb->end();
      if (skip_prev) {
        const std::uint64_t k = rng.uniform_index(nb->size() - 1);
        std::uint64_t seen = 0;
        for (const VertexId cand : *nb) {
          if (cand == prev) continue;
          if (seen++ == k) {
            next = cand;
            break;
          }
        }
      } else {
        next = (*nb)[rng.uniform_index(nb->size())];
      }
      trace.push_back(next);
      row.push_back(class_of(next));
      prev = cur;
      cur = next;
    }
  };

  std::vector<VertexId> trace;
  std::vector<ClassId> row;
  const long long budget = params.dedupe_walks ? 4LL * n : 0;
  long long retries = 0;
  while (static_cast<int>(rows.size()) < n) {
    draw_walk(trace, row);
    if (params.dedupe_walks && std::find(rows.begin(), rows.end(), row) != rows.end()) {
      if (retries < budget) {
        ++retries;
        continue;
      }
      break;  // budget exhausted; pad below
    }
    rows.push_back(row);
    traces.push_back(trace);
  }
  for (size_t i = 0, accepted = rows.size(); static_cast<int>(rows.size()) < n; ++i) {
    rows.push_back(rows[i % accepted]);
    traces.push_back(traces[i % accepted]);
  }

  // Canonical order: rows sorted lexicographically, traces permuted along.
  std::vector<size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return rows[a] < rows[b]; });

  TracedDescriptor out;
  out.descriptor.seed_class = vertex_it->second.class_id;
  out.descriptor.depth = m;
  out.descriptor.degenerate = isolated;
  out.descriptor.rows.reserve(n);
  out.descriptor.row_hashes.reserve(n);
  out.traces.reserve(n);
  for (const size_t i : order) {
    out.descriptor.rows.push_back(std::move(rows[i]));
    out.descriptor.row_hashes.push_back(hash_row(out.descriptor.rows.back()));
    out.traces.push_back(std::move(traces[i]));
  }
  return out;
}

WalkDescriptor describe_vertex(const SemanticGraph& graph, VertexId vertex_id,
                               const WalkParams& params) {
  return describe_vertex_traced(graph.adjacency(), graph.vertices, vertex_id, params).descriptor;
}

DescriptorMap describe_graph(const SemanticGraph& graph, const WalkParams& params, int threads) {
  const auto adjacency = graph.adjacency();
  std::vector<VertexId> ids;
  ids.reserve(graph.vertices.size());
  for (const auto& [id, v] : graph.vertices) ids.push_back(id);

  std::vector<WalkDescriptor> slots(ids.size());
  const auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      slots[i] =
          describe_vertex_traced(adjacency, graph.vertices, ids[i], params).descriptor;
    }
  };

  if (threads <= 1 || ids.size() < 2) {
    work(0, ids.size());
  } else {
    const size_t n_threads = std::min<size_t>(threads, ids.size());
    std::vector<std::thread> pool;
    const size_t chunk = (ids.size() + n_threads - 1) / n_threads;
    for (size_t t = 0; t < n_threads; ++t) {
      const size_t begin = t * chunk;
      const size_t end = std::min(ids.size(), begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  DescriptorMap out;
  for (size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], std::move(slots[i]));
  return out;
}

DescriptorMap descriptors_from_rows(
    const SemanticGraph& graph,
    const std::map<VertexId, std::vector<std::vector<ClassId>>>& rows) {
  DescriptorMap out;
  for (const auto& [id, vertex_rows] : rows) {
    const auto vertex_it = graph.vertices.find(id);
    if (vertex_it == graph.vertices.end()) {
      throw Error("walks: serialized rows reference unknown vertex " + std::to_string(id));
    }
    if (vertex_rows.empty()) throw Error("walks: vertex " + std::to_string(id) + " has no rows");
    WalkDescriptor d;
    d.seed_class = vertex_it->second.class_id;
    d.depth = static_cast<int>(vertex_rows.front().size());
    d.rows = vertex_rows;
    std::sort(d.rows.begin(), d.rows.end());
    for (const auto& row : d.rows) {
      if (static_cast<int>(row.size()) != d.depth) {
        throw Error("walks: ragged rows for vertex " + std::to_string(id));
      }
      d.row_hashes.push_back(hash_row(row));
    }
    d.degenerate = graph.degree(id) == 0;
    out.emplace(id, std::move(d));
  }
  return out;
}

std::map<VertexId, std::vector<std::vector<ClassId>>> rows_from_descriptors(
    const DescriptorMap& descriptors) {
  std::map<VertexId, std::vector<std::vector<ClassId>>> out;
  for (const auto& [id, d] : descriptors) out.emplace(id, d.rows);
  return out;
}

}  // namespace semloc
