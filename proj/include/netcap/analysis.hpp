#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <optional>
#include <string>
#include <string_view>

#include "netcap/graph.hpp"
#include "netcap/routing.hpp"

namespace netcap {

// Expected generation pattern per unit rate: entry (i, j) is the share of new
// packets born at i and bound for j. Zero diagonal, entries sum to 1.
class BornMatrix {
 public:
  static BornMatrix uniform(std::size_t n);
  static BornMatrix custom(Eigen::MatrixXd values);

  std::size_t size() const noexcept { return n_; }
  bool is_uniform() const noexcept { return !values_.has_value(); }
  Eigen::VectorXd column(Vertex dest) const;
  Eigen::MatrixXd dense() const;

 private:
  std::size_t n_ = 0;
  std::optional<Eigen::MatrixXd> values_;
};

enum class SolveMethod { Direct, Neumann };

std::string_view to_string(SolveMethod method);
SolveMethod parse_solve_method(std::string_view name);

// How the direct method factorizes. LowRank (local routings only) inverts
// I - P^T + 11^T/N once and treats each destination as a rank-(k+1) update
// of it; SparseLU factorizes every destination's system separately.
enum class DirectStrategy { Auto, LowRank, SparseLU };

struct SolveOptions {
  SolveMethod method = SolveMethod::Direct;
  DirectStrategy strategy = DirectStrategy::Auto;
  double tol = 1e-12;
  std::size_t max_iterations = 1'000'000;  // Neumann only
  std::size_t workers = 0;                 // 0: default_worker_count()
};

// Unit-load occupancy matrix. Column x holds the expected number of queue
// visits at each vertex by packets bound for x, scaled by the born matrix.
struct AlphaMatrix {
  Eigen::MatrixXd alpha0;
  Eigen::VectorXd row_sums;  // s0
  double residual = 0.0;     // max-norm of the occupancy-equation residual
  SolveMethod method = SolveMethod::Direct;
  double tol = 0.0;
  std::size_t max_neumann_iterations = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(alpha0.rows()); }
};

// P with the rows of dest's neighbors zeroed.
Eigen::SparseMatrix<double, Eigen::RowMajor> destination_restricted_matrix(const TransitionMatrix& p,
                                                                           const Graph& g,
                                                                           Vertex dest);

// One solve per destination. Throws ValidationError for inconsistent
// routings, SingularSystem / NonConvergent when a destination is unreachable.
AlphaMatrix solve_alpha(const Graph& g, const RoutingSpec& routing, const SolveOptions& options = {},
                        const BornMatrix* born = nullptr);

// max_x || beta_x - Pd_x^T beta_x - J_x ||_max
double alpha_residual(const Graph& g, const RoutingSpec& routing, const Eigen::MatrixXd& alpha0,
                      const BornMatrix& born);

struct CapacityReport {
  std::size_t n = 0;
  double rc0 = 0.0;        // 1 / max row sum
  double mean_time = 0.0;  // T, in hops
  double t0 = 0.0;         // T / N
  Eigen::VectorXd per_destination_time;  // T_s
  Eigen::VectorXd row_sums;              // s0
  Eigen::VectorXd betweenness;           // N(N-1) s0
  double b_max = 0.0;
  double b_mean = 0.0;
  double rc0_from_betweenness = 0.0;  // N(N-1) / b_max
};

CapacityReport capacity_report(const AlphaMatrix& alpha);

struct QueueLengths {
  Eigen::VectorXd per_vertex;  // L_i = R s0_i
  double total = 0.0;
  double time_ratio = 0.0;  // total / R, equals T
};

// Free-flow queue lengths. Throws CongestedError when (R/C) max s0 >= 1.
QueueLengths queue_lengths(const AlphaMatrix& alpha, double rate, double capacity);

// Large sparse network estimate of rc0 from the routing's stationary law.
double approx_capacity(const Graph& g, const StationaryDistribution& pi);

struct BoundCheck {
  double value = 0.0;
  double limit = 0.0;
  bool holds = false;
  bool hard = false;
};

struct BoundsReport {
  BoundCheck t0rc0;              // t0 * rc0 <= 1 (exact)
  BoundCheck harmonic;           // rc0 <= 1 / <1/k>, asymptotic, local routings
  BoundCheck diameter_capacity;  // rc0 <= N / Z
  BoundCheck diameter_time;      // T >= Z
  double eq5_ratio = 0.0;        // T * pi_max * rc0, tends to 1 for large sparse graphs
};

inline constexpr double kBoundSlack = 1e-12;

BoundsReport bounds_report(const CapacityReport& report, const DegreeStats& stats, double z,
                           const StationaryDistribution& pi);

}  // namespace netcap
