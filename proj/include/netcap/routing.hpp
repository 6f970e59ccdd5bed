#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netcap/graph.hpp"

namespace netcap {

// Row-stochastic N x N matrix stored by rows, columns sorted, zeros dropped.
class TransitionMatrix {
 public:
  struct Entry {
    Vertex col;
    double p;
  };

  TransitionMatrix() = default;
  // Entries need not be sorted; duplicates are summed, zeros dropped. No
  // stochasticity check here; see validate_consistency.
  TransitionMatrix(std::size_t n, std::vector<std::vector<Entry>> rows);

  std::size_t size() const noexcept { return rows_.size(); }
  std::span<const Entry> row(Vertex i) const noexcept { return rows_[i]; }
  double at(Vertex i, Vertex j) const noexcept;
  double row_sum(Vertex i) const noexcept;
  std::size_t nonzeros() const noexcept;

  std::vector<double> to_dense() const;  // row-major n*n

 private:
  std::vector<std::vector<Entry>> rows_;
};

enum class RoutingKind { Local, Global };

// A local routing holds one matrix; a global routing holds one per
// destination, where matrices[x] routes packets bound for x.
class RoutingSpec {
 public:
  static RoutingSpec local(TransitionMatrix p);
  static RoutingSpec global(std::vector<TransitionMatrix> per_destination);

  RoutingKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return matrices_.empty() ? 0 : matrices_.front().size(); }
  const TransitionMatrix& for_destination(Vertex x) const noexcept {
    return kind_ == RoutingKind::Local ? matrices_.front() : matrices_[x];
  }
  std::span<const TransitionMatrix> matrices() const noexcept { return matrices_; }

 private:
  RoutingKind kind_ = RoutingKind::Local;
  std::vector<TransitionMatrix> matrices_;
};

std::string_view to_string(RoutingKind kind);

struct ConsistencyReport {
  bool ok = true;
  std::vector<std::string> problems;
  explicit operator bool() const noexcept { return ok; }
};

inline constexpr double kRowSumTolerance = 1e-12;

// support(p) within support(A), zero diagonal, entries in [0,1], rows sum to 1.
ConsistencyReport validate_consistency(const TransitionMatrix& p, const Graph& g);
ConsistencyReport validate_consistency(const RoutingSpec& r, const Graph& g);

TransitionMatrix uniform_random_walk(const Graph& g);
TransitionMatrix degree_biased(const Graph& g, double beta);

// Independent uniform(0,1] weight per directed edge, normalized per row.
TransitionMatrix random_weighted(const Graph& g, std::uint64_t seed);

// Uniform choice among all hop-count shortest paths to each destination.
// The destination's own row holds the random-walk row; it is never used.
RoutingSpec shortest_path_routing(const Graph& g);

struct StationaryDistribution {
  std::vector<double> pi;
  double pi_max = 0.0;
  double residual = 0.0;  // ||P^T pi - pi||_1
  std::size_t iterations = 0;
};

enum class StationaryMethod { Power, Direct };

struct StationaryOptions {
  double tol = 1e-12;
  StationaryMethod method = StationaryMethod::Power;
  std::size_t max_iterations = 1'000'000;
};

// Throws NonConvergent when power iteration hits its cap.
StationaryDistribution stationary_distribution(const TransitionMatrix& p,
                                               const StationaryOptions& options = {});

// Matrix text forms: dense CSV (one row per line) or "i j p" triplets.
void write_dense_csv(std::ostream& out, const TransitionMatrix& p);
void write_triplets(std::ostream& out, const TransitionMatrix& p);
// Detects the format from the first data line. n is required for triplets
// and checked against the dense width otherwise.
TransitionMatrix read_transition_matrix(std::istream& in, std::size_t n);

}  // namespace netcap
