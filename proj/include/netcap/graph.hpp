#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace netcap {

using Vertex = std::int32_t;

struct Edge {
  Vertex u;
  Vertex v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Undirected simple graph in compressed adjacency form. Vertex ids are dense
// and 0-based; neighbor lists are sorted. Immutable after construction.
class Graph {
 public:
  Graph() = default;

  // Builds from an edge list. Duplicate edges (in either orientation) are
  // collapsed. Throws SelfLoopError, InvalidParams for out-of-range ids, and
  // DisconnectedError when require_connected is set and the graph is not.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges,
                          bool require_connected = true);

  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  // Edges with u < v, sorted lexicographically.
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::span<const Vertex> neighbors(Vertex v) const noexcept {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  std::vector<std::size_t> degrees() const;
  bool adjacent(Vertex u, Vertex v) const noexcept;

  // Position of v inside neighbors(u), or -1.
  std::ptrdiff_t neighbor_index(Vertex u, Vertex v) const noexcept;

  // CSR offsets into the concatenated neighbor lists (size n+1).
  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const Vertex> targets() const noexcept { return targets_; }

  // External ids when the graph was loaded with re-indexing; empty otherwise.
  const std::vector<std::int64_t>& labels() const noexcept { return labels_; }
  void set_labels(std::vector<std::int64_t> labels);

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Vertex> targets_;
  std::vector<Edge> edges_;
  std::vector<std::int64_t> labels_;
};

struct DegreeStats {
  double mean_degree = 0.0;
  double mean_inverse_degree = 0.0;
  double harmonic_bound = 0.0;  // 1 / mean_inverse_degree
  std::size_t min_degree = 0;
  std::size_t max_degree = 0;
};

struct LoadOptions {
  // Compact sparse external ids to 0..n-1 and keep them as labels.
  bool reindex = false;
};

Graph load_edge_list(std::istream& in, const LoadOptions& options = {});
Graph parse_edge_list(std::string_view text, const LoadOptions& options = {});
void write_edge_list(std::ostream& out, const Graph& g);

// Preferential attachment from an (m+1)-clique seed; each new vertex picks m
// distinct degree-weighted targets by rejection sampling.
Graph generate_ba(std::size_t n, std::size_t m, std::uint64_t seed);

DegreeStats degree_stats(const Graph& g);

// Hop distances from source; -1 marks unreachable vertices.
std::vector<int> bfs_distances(const Graph& g, Vertex source);

// Mean hop distance over ordered pairs u != v.
double average_shortest_path_length(const Graph& g);

bool is_connected(const Graph& g);

// Common fixtures.
Graph complete_graph(std::size_t n);
Graph path_graph(std::size_t n);
Graph star_graph(std::size_t n);
Graph cycle_graph(std::size_t n);

}  // namespace netcap
