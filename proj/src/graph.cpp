#include "netcap/graph.hpp"

#include <algorithm>
#include <limits>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "netcap/errors.hpp"

namespace netcap {

namespace {

bool connected_csr(std::span<const std::size_t> offsets, std::span<const Vertex> targets) {
  const std::size_t n = offsets.size() - 1;
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<Vertex> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    for (std::size_t e = offsets[v]; e < offsets[v + 1]; ++e) {
      const Vertex w = targets[e];
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == n;
}

}  // namespace

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges, bool require_connected) {
  if (n == 0) throw InvalidParams("graph must have at least one vertex");
  Graph g;
  g.edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n ||
        static_cast<std::size_t>(e.v) >= n) {
      throw InvalidParams("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                          ") out of range for " + std::to_string(n) + " vertices");
    }
    if (e.u == e.v) throw SelfLoopError("self-loop at vertex " + std::to_string(e.u));
    g.edges_.push_back(e.u < e.v ? e : Edge{e.v, e.u});
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());

  std::vector<std::size_t> deg(n, 0);
  for (const Edge& e : g.edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  g.offsets_.assign(n + 1, 0);
  std::partial_sum(deg.begin(), deg.end(), g.offsets_.begin() + 1);
  g.targets_.resize(g.offsets_[n]);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const Edge& e : g.edges_) {
    g.targets_[fill[e.u]++] = e.v;
    g.targets_[fill[e.v]++] = e.u;
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(g.targets_.begin() + g.offsets_[v], g.targets_.begin() + g.offsets_[v + 1]);
  }

  if (require_connected && !connected_csr(g.offsets_, g.targets_)) {
    throw DisconnectedError("graph with " + std::to_string(n) + " vertices is not connected");
  }
  return g;
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> out(size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = degree(static_cast<Vertex>(v));
  return out;
}

bool Graph::adjacent(Vertex u, Vertex v) const noexcept { return neighbor_index(u, v) >= 0; }

std::ptrdiff_t Graph::neighbor_index(Vertex u, Vertex v) const noexcept {
  const auto nb = neighbors(u);
  const auto it = std::lower_bound(nb.begin(), nb.end(), v);
  if (it == nb.end() || *it != v) return -1;
  return it - nb.begin();
}

void Graph::set_labels(std::vector<std::int64_t> labels) {
  if (!labels.empty() && labels.size() != size()) {
    throw InvalidParams("label count does not match vertex count");
  }
  labels_ = std::move(labels);
}

Graph load_edge_list(std::istream& in, const LoadOptions& options) {
  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::int64_t a = -1, b = -1;
    std::string extra;
    if (!(ls >> a >> b) || (ls >> extra) || a < 0 || b < 0) {
      throw ParseError("line " + std::to_string(lineno) + ": expected two nonnegative ids, got '" +
                       line + "'");
    }
    if (a == b) throw SelfLoopError("line " + std::to_string(lineno) + ": self-loop at " + std::to_string(a));
    raw.emplace_back(a, b);
  }
  if (raw.empty()) throw ParseError("edge list is empty");

  std::vector<Edge> edges;
  edges.reserve(raw.size());
  std::vector<std::int64_t> labels;
  std::size_t n = 0;
  if (options.reindex) {
    std::map<std::int64_t, Vertex> ids;
    for (auto [a, b] : raw) {
      ids.emplace(a, 0);
      ids.emplace(b, 0);
    }
    Vertex next = 0;
    for (auto& [label, id] : ids) {
      id = next++;
      labels.push_back(label);
    }
    for (auto [a, b] : raw) edges.push_back({ids.at(a), ids.at(b)});
    n = ids.size();
  } else {
    std::int64_t max_id = 0;
    for (auto [a, b] : raw) max_id = std::max({max_id, a, b});
    if (max_id >= std::numeric_limits<Vertex>::max()) throw ParseError("vertex id too large");
    for (auto [a, b] : raw) edges.push_back({static_cast<Vertex>(a), static_cast<Vertex>(b)});
    n = static_cast<std::size_t>(max_id) + 1;
  }
  Graph g = Graph::from_edges(n, edges);
  if (!labels.empty()) g.set_labels(std::move(labels));
  return g;
}

Graph parse_edge_list(std::string_view text, const LoadOptions& options) {
  std::istringstream in{std::string(text)};
  return load_edge_list(in, options);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  const auto& labels = g.labels();
  for (const Edge& e : g.edges()) {
    if (labels.empty()) {
      out << e.u << ' ' << e.v << '\n';
    } else {
      out << labels[e.u] << ' ' << labels[e.v] << '\n';
    }
  }
}

Graph generate_ba(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1 || n <= m) {
    throw InvalidParams("BA generator needs n > m >= 1 (got n=" + std::to_string(n) +
                        ", m=" + std::to_string(m) + ")");
  }
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  edges.reserve(m * (m + 1) / 2 + m * (n - m - 1));
  // Every edge endpoint once: uniform draws from it are degree-weighted.
  std::vector<Vertex> endpoints;
  endpoints.reserve(2 * edges.capacity());
  for (std::size_t u = 0; u <= m; ++u) {
    for (std::size_t v = u + 1; v <= m; ++v) {
      edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v)});
      endpoints.push_back(static_cast<Vertex>(u));
      endpoints.push_back(static_cast<Vertex>(v));
    }
  }
  std::vector<Vertex> targets;
  targets.reserve(m);
  for (std::size_t v = m + 1; v < n; ++v) {
    targets.clear();
    std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
    while (targets.size() < m) {
      const Vertex t = endpoints[pick(rng)];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (Vertex t : targets) {
      edges.push_back({t, static_cast<Vertex>(v)});
      endpoints.push_back(t);
      endpoints.push_back(static_cast<Vertex>(v));
    }
  }
  return Graph::from_edges(n, edges);
}

DegreeStats degree_stats(const Graph& g) {
  DegreeStats s;
  const std::size_t n = g.size();
  s.min_degree = std::numeric_limits<std::size_t>::max();
  double sum = 0.0, inv = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t k = g.degree(static_cast<Vertex>(v));
    sum += static_cast<double>(k);
    inv += k > 0 ? 1.0 / static_cast<double>(k) : std::numeric_limits<double>::infinity();
    s.min_degree = std::min(s.min_degree, k);
    s.max_degree = std::max(s.max_degree, k);
  }
  s.mean_degree = sum / static_cast<double>(n);
  s.mean_inverse_degree = inv / static_cast<double>(n);
  s.harmonic_bound = 1.0 / s.mean_inverse_degree;
  return s;
}

std::vector<int> bfs_distances(const Graph& g, Vertex source) {
  std::vector<int> dist(g.size(), -1);
  std::vector<Vertex> frontier{source};
  dist[source] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const Vertex v = frontier[head];
    for (Vertex w : g.neighbors(v)) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        frontier.push_back(w);
      }
    }
  }
  return dist;
}

double average_shortest_path_length(const Graph& g) {
  const std::size_t n = g.size();
  if (n < 2) throw InvalidParams("average shortest path length needs at least two vertices");
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    for (int d : bfs_distances(g, static_cast<Vertex>(s))) {
      if (d < 0) throw DisconnectedError("average shortest path length on a disconnected graph");
      total += d;
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

bool is_connected(const Graph& g) {
  return g.size() > 0 && connected_csr(g.offsets(), g.targets());
}

Graph complete_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) edges.push_back({Vertex(u), Vertex(v)});
  return Graph::from_edges(n, edges);
}

Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t v = 0; v + 1 < n; ++v) edges.push_back({Vertex(v), Vertex(v + 1)});
  return Graph::from_edges(n, edges);
}

Graph star_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t v = 1; v < n; ++v) edges.push_back({0, Vertex(v)});
  return Graph::from_edges(n, edges);
}

Graph cycle_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t v = 0; v < n; ++v) edges.push_back({Vertex(v), Vertex((v + 1) % n)});
  return Graph::from_edges(n, edges);
}

}  // namespace netcap
