#include "netcap/routing.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "netcap/errors.hpp"

namespace netcap {

TransitionMatrix::TransitionMatrix(std::size_t n, std::vector<std::vector<Entry>> rows)
    : rows_(std::move(rows)) {
  if (rows_.size() != n) throw InvalidParams("transition matrix row count mismatch");
  for (auto& r : rows_) {
    std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
    std::vector<Entry> merged;
    merged.reserve(r.size());
    for (const Entry& e : r) {
      if (e.col < 0 || static_cast<std::size_t>(e.col) >= n) {
        throw InvalidParams("transition matrix column " + std::to_string(e.col) + " out of range");
      }
      if (!merged.empty() && merged.back().col == e.col) {
        merged.back().p += e.p;
      } else {
        merged.push_back(e);
      }
    }
    std::erase_if(merged, [](const Entry& e) { return e.p == 0.0; });
    r = std::move(merged);
  }
}

double TransitionMatrix::at(Vertex i, Vertex j) const noexcept {
  const auto& r = rows_[i];
  const auto it = std::lower_bound(r.begin(), r.end(), j,
                                   [](const Entry& e, Vertex c) { return e.col < c; });
  return (it != r.end() && it->col == j) ? it->p : 0.0;
}

double TransitionMatrix::row_sum(Vertex i) const noexcept {
  double s = 0.0;
  for (const Entry& e : rows_[i]) s += e.p;
  return s;
}

std::size_t TransitionMatrix::nonzeros() const noexcept {
  std::size_t nz = 0;
  for (const auto& r : rows_) nz += r.size();
  return nz;
}

std::vector<double> TransitionMatrix::to_dense() const {
  const std::size_t n = size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (const Entry& e : rows_[i]) d[i * n + static_cast<std::size_t>(e.col)] = e.p;
  return d;
}

RoutingSpec RoutingSpec::local(TransitionMatrix p) {
  RoutingSpec r;
  r.kind_ = RoutingKind::Local;
  r.matrices_.push_back(std::move(p));
  return r;
}

RoutingSpec RoutingSpec::global(std::vector<TransitionMatrix> per_destination) {
  const std::size_t n = per_destination.size();
  for (const auto& p : per_destination) {
    if (p.size() != n) throw InvalidParams("global routing needs N matrices of order N");
  }
  RoutingSpec r;
  r.kind_ = RoutingKind::Global;
  r.matrices_ = std::move(per_destination);
  return r;
}

std::string_view to_string(RoutingKind kind) {
  return kind == RoutingKind::Local ? "local" : "global";
}

ConsistencyReport validate_consistency(const TransitionMatrix& p, const Graph& g) {
  ConsistencyReport rep;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    if (rep.problems.size() < 50) rep.problems.push_back(std::move(msg));
  };
  if (p.size() != g.size()) {
    fail("matrix order " + std::to_string(p.size()) + " != vertex count " + std::to_string(g.size()));
    return rep;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto v = static_cast<Vertex>(i);
    double sum = 0.0;
    for (const auto& e : p.row(v)) {
      sum += e.p;
      if (!(e.p >= 0.0 && e.p <= 1.0)) {
        fail("p[" + std::to_string(i) + "][" + std::to_string(e.col) + "] = " +
             std::to_string(e.p) + " outside [0,1]");
      }
      if (e.col == v) {
        fail("nonzero diagonal at " + std::to_string(i));
      } else if (!g.adjacent(v, e.col)) {
        fail("p[" + std::to_string(i) + "][" + std::to_string(e.col) + "] > 0 but no edge");
      }
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os << std::setprecision(17) << "row " << i << " sums to " << sum;
      fail(os.str());
    }
  }
  return rep;
}

ConsistencyReport validate_consistency(const RoutingSpec& r, const Graph& g) {
  ConsistencyReport rep;
  if (r.kind() == RoutingKind::Global && r.matrices().size() != g.size()) {
    rep.ok = false;
    rep.problems.push_back("global routing has " + std::to_string(r.matrices().size()) +
                           " matrices for " + std::to_string(g.size()) + " vertices");
    return rep;
  }
  for (std::size_t x = 0; x < r.matrices().size(); ++x) {
    auto sub = validate_consistency(r.matrices()[x], g);
    if (!sub) {
      rep.ok = false;
      for (auto& msg : sub.problems) {
        rep.problems.push_back(r.kind() == RoutingKind::Global
                                   ? "destination " + std::to_string(x) + ": " + msg
                                   : std::move(msg));
      }
    }
  }
  if (r.kind() == RoutingKind::Global && rep.ok) {
    // Every vertex must reach x through the support of P_x.
    for (std::size_t x = 0; x < g.size(); ++x) {
      const auto& p = r.matrices()[x];
      std::vector<std::vector<Vertex>> reverse(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (i == x) continue;
        for (const auto& e : p.row(static_cast<Vertex>(i))) reverse[e.col].push_back(static_cast<Vertex>(i));
      }
      std::vector<char> seen(g.size(), 0);
      std::vector<Vertex> stack{static_cast<Vertex>(x)};
      seen[x] = 1;
      while (!stack.empty()) {
        const Vertex v = stack.back();
        stack.pop_back();
        for (Vertex u : reverse[v]) {
          if (!seen[u]) {
            seen[u] = 1;
            stack.push_back(u);
          }
        }
      }
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!seen[i]) {
          rep.ok = false;
          rep.problems.push_back("destination " + std::to_string(x) + " unreachable from " +
                                 std::to_string(i));
          break;
        }
      }
    }
  }
  return rep;
}

TransitionMatrix degree_biased(const Graph& g, double beta) {
  const std::size_t n = g.size();
  std::vector<std::vector<TransitionMatrix::Entry>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = g.neighbors(static_cast<Vertex>(i));
    double total = 0.0;
    rows[i].reserve(nb.size());
    for (Vertex j : nb) {
      const double w = beta == 0.0 ? 1.0 : std::pow(static_cast<double>(g.degree(j)), beta);
      rows[i].push_back({j, w});
      total += w;
    }
    for (auto& e : rows[i]) e.p /= total;
  }
  return TransitionMatrix(n, std::move(rows));
}

TransitionMatrix uniform_random_walk(const Graph& g) { return degree_biased(g, 0.0); }

TransitionMatrix random_weighted(const Graph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = g.size();
  std::vector<std::vector<TransitionMatrix::Entry>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (Vertex j : g.neighbors(static_cast<Vertex>(i))) {
      const double w = 1.0 - unit(rng);  // (0, 1]
      rows[i].push_back({j, w});
      total += w;
    }
    for (auto& e : rows[i]) e.p /= total;
  }
  return TransitionMatrix(n, std::move(rows));
}

RoutingSpec shortest_path_routing(const Graph& g) {
  const std::size_t n = g.size();
  const TransitionMatrix walk = uniform_random_walk(g);
  std::vector<TransitionMatrix> per_dest;
  per_dest.reserve(n);
  std::vector<double> sigma(n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto dist = bfs_distances(g, static_cast<Vertex>(x));
    std::vector<Vertex> order(n);
    for (std::size_t v = 0; v < n; ++v) {
      if (dist[v] < 0) throw DisconnectedError("shortest-path routing on a disconnected graph");
      order[v] = static_cast<Vertex>(v);
    }
    std::sort(order.begin(), order.end(), [&](Vertex a, Vertex b) { return dist[a] < dist[b]; });
    std::fill(sigma.begin(), sigma.end(), 0.0);
    sigma[x] = 1.0;
    for (Vertex v : order) {
      if (static_cast<std::size_t>(v) == x) continue;
      for (Vertex w : g.neighbors(v))
        if (dist[w] == dist[v] - 1) sigma[v] += sigma[w];
    }
    std::vector<std::vector<TransitionMatrix::Entry>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<Vertex>(i);
      if (i == x) {
        rows[i].assign(walk.row(v).begin(), walk.row(v).end());
        continue;
      }
      for (Vertex w : g.neighbors(v))
        if (dist[w] == dist[v] - 1) rows[i].push_back({w, sigma[w] / sigma[v]});
    }
    per_dest.emplace_back(n, std::move(rows));
  }
  return RoutingSpec::global(std::move(per_dest));
}

namespace {

// y = P^T x
void multiply_transpose(const TransitionMatrix& p, const std::vector<double>& x,
                        std::vector<double>& y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (const auto& e : p.row(static_cast<Vertex>(i))) y[e.col] += e.p * xi;
  }
}

double stationary_residual(const TransitionMatrix& p, const std::vector<double>& pi) {
  std::vector<double> y(pi.size());
  multiply_transpose(p, pi, y);
  double r = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) r += std::abs(y[i] - pi[i]);
  return r;
}

StationaryDistribution finish(std::vector<double> pi, const TransitionMatrix& p,
                              std::size_t iterations) {
  StationaryDistribution out;
  out.pi = std::move(pi);
  out.pi_max = *std::max_element(out.pi.begin(), out.pi.end());
  out.residual = stationary_residual(p, out.pi);
  out.iterations = iterations;
  return out;
}

}  // namespace

StationaryDistribution stationary_distribution(const TransitionMatrix& p,
                                               const StationaryOptions& options) {
  const std::size_t n = p.size();
  if (n == 0) throw InvalidParams("empty transition matrix");

  if (options.method == StationaryMethod::Direct) {
    // (I - P^T) pi = 0 with the last equation replaced by sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(p.nonzeros() + 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i + 1 < n) trip.emplace_back(i, i, 1.0);
      for (const auto& e : p.row(static_cast<Vertex>(i)))
        if (static_cast<std::size_t>(e.col) + 1 < n) trip.emplace_back(e.col, i, -e.p);
      trip.emplace_back(n - 1, i, 1.0);
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) throw SingularSystem("stationary system is singular");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    const Eigen::VectorXd x = lu.solve(rhs);
    std::vector<double> pi(x.data(), x.data() + n);
    double sum = 0.0;
    for (double& v : pi) {
      v = std::max(v, 0.0);
      sum += v;
    }
    for (double& v : pi) v /= sum;
    return finish(std::move(pi), p, 0);
  }

  // Lazy chain (I + P^T)/2: same fixed point, aperiodic even on bipartite graphs.
  std::vector<double> x(n, 1.0 / static_cast<double>(n)), y(n);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    multiply_transpose(p, x, y);
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += std::abs(y[i] - x[i]);
    if (residual <= options.tol) return finish(std::move(x), p, it);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 0.5 * (x[i] + y[i]);
      sum += x[i];
    }
    for (double& v : x) v /= sum;
  }
  throw NonConvergent("stationary distribution: power iteration did not reach tol " +
                      std::to_string(options.tol) + " in " +
                      std::to_string(options.max_iterations) + " iterations");
}

void write_dense_csv(std::ostream& out, const TransitionMatrix& p) {
  const std::size_t n = p.size();
  const auto d = p.to_dense();
  out << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j) out << ',';
      out << d[i * n + j];
    }
    out << '\n';
  }
}

void write_triplets(std::ostream& out, const TransitionMatrix& p) {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (const auto& e : p.row(static_cast<Vertex>(i))) out << i << ' ' << e.col << ' ' << e.p << '\n';
}

TransitionMatrix read_transition_matrix(std::istream& in, std::size_t n) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw ParseError("transition matrix file is empty");

  std::vector<std::vector<TransitionMatrix::Entry>> rows(n);
  const bool dense = lines.front().find(',') != std::string::npos || n == 1;
  if (dense) {
    if (lines.size() != n) {
      throw ParseError("dense matrix has " + std::to_string(lines.size()) + " rows, expected " +
                       std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::istringstream ls(lines[i]);
      std::string cell;
      std::size_t j = 0;
      while (std::getline(ls, cell, ',')) {
        double v = 0.0;
        std::istringstream cs(cell);
        if (!(cs >> v)) throw ParseError("row " + std::to_string(i) + ": bad value '" + cell + "'");
        if (j >= n) throw ParseError("row " + std::to_string(i) + " is wider than " + std::to_string(n));
        if (v != 0.0) rows[i].push_back({static_cast<Vertex>(j), v});
        ++j;
      }
      if (j != n) throw ParseError("row " + std::to_string(i) + " has " + std::to_string(j) + " columns");
    }
  } else {
    for (const auto& l : lines) {
      std::istringstream ls(l);
      long long i = -1, j = -1;
      double v = 0.0;
      std::string extra;
      if (!(ls >> i >> j >> v) || (ls >> extra)) throw ParseError("bad triplet line '" + l + "'");
      if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
        throw ParseError("triplet index out of range in '" + l + "'");
      }
      rows[i].push_back({static_cast<Vertex>(j), v});
    }
  }
  return TransitionMatrix(n, std::move(rows));
}

}  // namespace netcap
