#include "netcap/analysis.hpp"

#include <Eigen/LU>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

#include "netcap/errors.hpp"
#include "netcap/parallel.hpp"

namespace netcap {

BornMatrix BornMatrix::uniform(std::size_t n) {
  if (n < 2) throw InvalidParams("born matrix needs at least two vertices");
  BornMatrix b;
  b.n_ = n;
  return b;
}

BornMatrix BornMatrix::custom(Eigen::MatrixXd values) {
  if (values.rows() != values.cols() || values.rows() < 2) {
    throw InvalidParams("born matrix must be square of order >= 2");
  }
  if ((values.array() < 0.0).any()) throw InvalidParams("born matrix has negative entries");
  if (values.diagonal().cwiseAbs().maxCoeff() != 0.0) throw InvalidParams("born matrix diagonal must be zero");
  if (std::abs(values.sum() - 1.0) > 1e-12) throw InvalidParams("born matrix entries must sum to 1");
  BornMatrix b;
  b.n_ = static_cast<std::size_t>(values.rows());
  b.values_ = std::move(values);
  return b;
}

Eigen::VectorXd BornMatrix::column(Vertex dest) const {
  if (values_) return values_->col(dest);
  const double nn = static_cast<double>(n_);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_), 1.0 / (nn * (nn - 1.0)));
  c[dest] = 0.0;
  return c;
}

Eigen::MatrixXd BornMatrix::dense() const {
  if (values_) return *values_;
  const auto n = static_cast<Eigen::Index>(n_);
  const double nn = static_cast<double>(n_);
  Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, 1.0 / (nn * (nn - 1.0)));
  j.diagonal().setZero();
  return j;
}

std::string_view to_string(SolveMethod method) {
  return method == SolveMethod::Direct ? "direct" : "neumann";
}

SolveMethod parse_solve_method(std::string_view name) {
  if (name == "direct") return SolveMethod::Direct;
  if (name == "neumann") return SolveMethod::Neumann;
  throw InvalidParams("unknown solve method '" + std::string(name) + "'");
}

Eigen::SparseMatrix<double, Eigen::RowMajor> destination_restricted_matrix(const TransitionMatrix& p,
                                                                           const Graph& g,
                                                                           Vertex dest) {
  const auto n = static_cast<Eigen::Index>(p.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(p.nonzeros());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = static_cast<Vertex>(i);
    if (g.adjacent(dest, v)) continue;
    for (const auto& e : p.row(v)) trip.emplace_back(i, e.col, e.p);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

namespace {

// Dense inverse memory is 8 N^2 bytes; past this order use sparse LU.
constexpr std::size_t kLowRankMaxOrder = 4000;

// beta - Pd^T beta - j, max norm. Rows of dest's neighbors contribute no flow.
double column_residual(const TransitionMatrix& p, const Graph& g, Vertex dest,
                       const Eigen::Ref<const Eigen::VectorXd>& beta, const Eigen::VectorXd& j) {
  Eigen::VectorXd r = beta - j;
  for (std::size_t b = 0; b < p.size(); ++b) {
    const auto v = static_cast<Vertex>(b);
    if (g.adjacent(dest, v)) continue;
    const double bv = beta[v];
    for (const auto& e : p.row(v)) r[e.col] -= e.p * bv;
  }
  return r.cwiseAbs().maxCoeff();
}

// Post-solve checks on one column: the destination's own entry vanishes and
// nothing is negative beyond roundoff. Both are then made exact.
void settle_column(Eigen::Ref<Eigen::VectorXd> beta, Vertex dest, double scale) {
  const double noise = 1e-9 * scale;
  if (std::abs(beta[dest]) > noise) {
    throw SingularSystem("occupancy at destination " + std::to_string(dest) +
                         " is nonzero: " + std::to_string(beta[dest]));
  }
  beta[dest] = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (beta[i] < 0.0) {
      if (beta[i] < -noise) {
        throw SingularSystem("negative occupancy " + std::to_string(beta[i]) + " at vertex " +
                             std::to_string(i) + " for destination " + std::to_string(dest));
      }
      beta[i] = 0.0;
    }
  }
}

// Shared CSC pattern of I - P^T over the adjacency: column b holds row b and
// the neighbors of b. Values are refilled per destination.
class RestrictedSystem {
 public:
  explicit RestrictedSystem(const Graph& g) : g_(g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.size() + g.targets().size());
    for (Eigen::Index b = 0; b < n; ++b) {
      trip.emplace_back(b, b, 1.0);
      for (Vertex a : g.neighbors(static_cast<Vertex>(b))) trip.emplace_back(a, b, 1.0);
    }
    m_.resize(n, n);
    m_.setFromTriplets(trip.begin(), trip.end());
    m_.makeCompressed();
  }

  const Eigen::SparseMatrix<double>& fill(const TransitionMatrix& p, Vertex dest) {
    const auto* outer = m_.outerIndexPtr();
    const auto* inner = m_.innerIndexPtr();
    double* values = m_.valuePtr();
    for (Eigen::Index b = 0; b < m_.outerSize(); ++b) {
      const auto v = static_cast<Vertex>(b);
      const bool cut = g_.adjacent(dest, v);
      auto row = p.row(v);
      auto it = row.begin();
      for (auto k = outer[b]; k < outer[b + 1]; ++k) {
        const auto a = static_cast<Vertex>(inner[k]);
        double val = a == v ? 1.0 : 0.0;
        while (it != row.end() && it->col < a) ++it;
        if (!cut && it != row.end() && it->col == a) val -= it->p;
        values[k] = val;
      }
    }
    return m_;
  }

  const Eigen::SparseMatrix<double>& pattern() const { return m_; }

 private:
  const Graph& g_;
  Eigen::SparseMatrix<double> m_;
};

void solve_direct_range(const Graph& g, const RoutingSpec& routing, const BornMatrix& born,
                        Eigen::MatrixXd& alpha0, std::size_t begin, std::size_t end) {
  RestrictedSystem system(g);
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(system.pattern());
  for (std::size_t x = begin; x < end; ++x) {
    const auto dest = static_cast<Vertex>(x);
    lu.factorize(system.fill(routing.for_destination(dest), dest));
    if (lu.info() != Eigen::Success) {
      throw SingularSystem("restricted system for destination " + std::to_string(x) +
                           " is singular: " + lu.lastErrorMessage());
    }
    const Eigen::VectorXd j = born.column(dest);
    Eigen::VectorXd beta = lu.solve(j);
    if (!beta.allFinite()) {
      throw SingularSystem("restricted system for destination " + std::to_string(x) + " is singular");
    }
    settle_column(beta, dest, beta.cwiseAbs().maxCoeff());
    alpha0.col(static_cast<Eigen::Index>(x)) = beta;
  }
}

// Local routings share P across destinations. With u = 1/N, the matrix
// A = I - P^T + u 1^T is nonsingular, and its inverse Z satisfies 1^T Z = 1^T
// and Z u = pi. Destination x with neighbor set S has
//   I - Pd_x^T = A + [P^T e_S, -u] [e_S, 1]^T,
// so each column costs one (k+1)-sized solve plus O(N k) work.
class LowRankSolver {
 public:
  LowRankSolver(const Graph& g, const TransitionMatrix& p) : g_(g), p_(p) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i, i) += 1.0;
      for (const auto& e : p.row(static_cast<Vertex>(i))) a(e.col, i) -= e.p;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    z_ = lu.inverse();
    if (!z_.allFinite()) throw SingularSystem("routing chain is not irreducible");
    pi_ = z_.rowwise().sum() / static_cast<double>(n);
    z_rows_ = z_.rowwise().sum();
  }

  // Solves (I - Pd_x^T) beta = b where zb = Z b has been formed by the caller.
  void solve(Vertex dest, const Eigen::VectorXd& b, const Eigen::VectorXd& zb,
             Eigen::Ref<Eigen::VectorXd> beta) const {
    const auto nb = g_.neighbors(dest);
    const auto k = static_cast<Eigen::Index>(nb.size());
    Eigen::MatrixXd kmat(k + 1, k + 1);
    Eigen::VectorXd y(k + 1);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) kmat(r, c) = z_(nb[r], nb[c]) + pi_[nb[r]];
      kmat(r, k) = -pi_[nb[r]];
      kmat(k, r) = 1.0;
      y[r] = zb[nb[r]];
    }
    kmat(k, k) = 0.0;
    y[k] = b.sum();
    const Eigen::VectorXd c = kmat.partialPivLu().solve(y);
    beta = zb;
    double c_sum = 0.0;
    for (Eigen::Index r = 0; r < k; ++r) {
      beta.noalias() -= c[r] * z_.col(nb[r]);
      beta[nb[r]] += c[r];
      c_sum += c[r];
    }
    beta += (c[k] - c_sum) * pi_;
  }

  Eigen::VectorXd apply_z(const Eigen::VectorXd& b) const { return z_ * b; }

  // Z applied to the uniform born column: c (Z 1 - Z e_x).
  Eigen::VectorXd apply_z_uniform(Vertex dest, double c) const {
    return c * (z_rows_ - z_.col(dest));
  }

  // b - (I - Pd_x^T) beta
  Eigen::VectorXd residual(Vertex dest, const Eigen::VectorXd& b, const Eigen::VectorXd& beta) const {
    Eigen::VectorXd r = b - beta;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const auto v = static_cast<Vertex>(i);
      if (g_.adjacent(dest, v)) continue;
      for (const auto& e : p_.row(v)) r[e.col] += e.p * beta[v];
    }
    return r;
  }

 private:
  const Graph& g_;
  const TransitionMatrix& p_;
  Eigen::MatrixXd z_;
  Eigen::VectorXd pi_;
  Eigen::VectorXd z_rows_;
};

void solve_low_rank(const Graph& g, const TransitionMatrix& p, const BornMatrix& born,
                    std::size_t workers, Eigen::MatrixXd& alpha0) {
  const LowRankSolver solver(g, p);
  const double nn = static_cast<double>(g.size());
  const double c = 1.0 / (nn * (nn - 1.0));
  parallel_chunks(g.size(), workers, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd beta(alpha0.rows()), fix(alpha0.rows());
    for (std::size_t x = begin; x < end; ++x) {
      const auto dest = static_cast<Vertex>(x);
      const Eigen::VectorXd b = born.column(dest);
      solver.solve(dest, b, born.is_uniform() ? solver.apply_z_uniform(dest, c) : solver.apply_z(b),
                   beta);
      // One step of iterative refinement recovers the digits lost to the
      // update formula on badly conditioned neighborhoods.
      const Eigen::VectorXd r = solver.residual(dest, b, beta);
      solver.solve(dest, r, solver.apply_z(r), fix);
      beta += fix;
      settle_column(beta, dest, beta.cwiseAbs().maxCoeff());
      alpha0.col(static_cast<Eigen::Index>(x)) = beta;
    }
  });
}

// beta <- Pd^T beta + j. Stops once the geometric tail estimate
// |delta| * rho / (1 - rho) is within tol (which implies |delta| <= tol).
std::size_t solve_neumann_column(const TransitionMatrix& p, const Graph& g, Vertex dest,
                                 const Eigen::VectorXd& j, const SolveOptions& options,
                                 Eigen::Ref<Eigen::VectorXd> beta) {
  const std::size_t n = p.size();
  std::vector<char> cut(n, 0);
  for (Vertex w : g.neighbors(dest)) cut[w] = 1;
  // Sum the series term by term. Differencing successive iterates instead
  // buries the increment under rounding noise once it drops below
  // eps * |beta|, and the tail estimate below then stops too early.
  beta = j;
  Eigen::VectorXd term = j;
  Eigen::VectorXd next(static_cast<Eigen::Index>(n));
  double back1 = 0.0, back2 = 0.0;  // norms of the two previous terms
  const double initial = std::max(j.lpNorm<1>(), 1e-300);
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    next.setZero();
    for (std::size_t b = 0; b < n; ++b) {
      if (cut[b]) continue;
      const double bv = term[static_cast<Eigen::Index>(b)];
      if (bv == 0.0) continue;
      for (const auto& e : p.row(static_cast<Vertex>(b))) next[e.col] += e.p * bv;
    }
    const double delta = next.lpNorm<1>();
    beta += next;
    term.swap(next);
    if (!std::isfinite(delta) || delta > 1e12 * initial) break;
    if (delta == 0.0) return it;
    // two-step ratio: on bipartite supports the one-step ratio alternates
    if (it > 2 && delta <= options.tol) {
      const double rho = std::sqrt(delta / back2);
      if (rho < 1.0 && delta * rho <= options.tol * (1.0 - rho)) return it;
    }
    back2 = back1;
    back1 = delta;
  }
  throw NonConvergent("Neumann series for destination " + std::to_string(dest) +
                      " did not converge within " + std::to_string(options.max_iterations) +
                      " iterations (destination unreachable under the routing?)");
}

}  // namespace

AlphaMatrix solve_alpha(const Graph& g, const RoutingSpec& routing, const SolveOptions& options,
                        const BornMatrix* born_in) {
  const std::size_t n = g.size();
  if (n < 2) throw InvalidParams("occupancy solve needs at least two vertices");
  if (routing.size() != n) throw ValidationError("routing order does not match graph");
  if (auto rep = validate_consistency(routing, g); !rep) {
    std::string msg = "routing is not consistent with the graph";
    for (const auto& p : rep.problems) msg += "; " + p;
    throw ValidationError(msg);
  }
  const BornMatrix born = born_in ? *born_in : BornMatrix::uniform(n);
  if (born.size() != n) throw InvalidParams("born matrix order does not match graph");

  AlphaMatrix out;
  out.method = options.method;
  out.tol = options.tol;
  out.alpha0.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  const bool low_rank = routing.kind() == RoutingKind::Local &&
                        (options.strategy == DirectStrategy::LowRank ||
                         (options.strategy == DirectStrategy::Auto && n <= kLowRankMaxOrder));
  if (options.method == SolveMethod::Direct && options.strategy == DirectStrategy::LowRank &&
      routing.kind() != RoutingKind::Local) {
    throw InvalidParams("the low-rank direct strategy needs a local routing");
  }
  if (options.method == SolveMethod::Direct && low_rank) {
    solve_low_rank(g, routing.for_destination(0), born, options.workers, out.alpha0);
  } else if (options.method == SolveMethod::Direct) {
    parallel_chunks(n, options.workers, [&](std::size_t begin, std::size_t end) {
      solve_direct_range(g, routing, born, out.alpha0, begin, end);
    });
  } else {
    std::vector<std::size_t> iterations(n, 0);
    parallel_chunks(n, options.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t x = begin; x < end; ++x) {
        const auto dest = static_cast<Vertex>(x);
        auto col = out.alpha0.col(static_cast<Eigen::Index>(x));
        iterations[x] = solve_neumann_column(routing.for_destination(dest), g, dest,
                                             born.column(dest), options, col);
        settle_column(col, dest, col.cwiseAbs().maxCoeff());
      }
    });
    out.max_neumann_iterations = *std::max_element(iterations.begin(), iterations.end());
  }

  out.row_sums = out.alpha0.rowwise().sum();
  out.residual = alpha_residual(g, routing, out.alpha0, born);
  return out;
}

double alpha_residual(const Graph& g, const RoutingSpec& routing, const Eigen::MatrixXd& alpha0,
                      const BornMatrix& born) {
  double worst = 0.0;
  for (Eigen::Index x = 0; x < alpha0.cols(); ++x) {
    const auto dest = static_cast<Vertex>(x);
    worst = std::max(worst, column_residual(routing.for_destination(dest), g, dest, alpha0.col(x),
                                            born.column(dest)));
  }
  return worst;
}

CapacityReport capacity_report(const AlphaMatrix& alpha) {
  CapacityReport r;
  r.n = alpha.size();
  const double n = static_cast<double>(r.n);
  const double pairs = n * (n - 1.0);
  r.row_sums = alpha.row_sums;
  const double s_max = r.row_sums.maxCoeff();
  r.rc0 = 1.0 / s_max;
  r.mean_time = alpha.alpha0.sum();
  r.t0 = r.mean_time / n;
  r.per_destination_time = n * alpha.alpha0.colwise().sum().transpose();
  r.betweenness = pairs * r.row_sums;
  r.b_max = r.betweenness.maxCoeff();
  r.b_mean = r.betweenness.mean();
  r.rc0_from_betweenness = pairs / r.b_max;
  if (std::abs(r.rc0_from_betweenness - r.rc0) > 1e-9 * std::max(1.0, r.rc0)) {
    throw std::logic_error("capacity from betweenness disagrees with 1/max row sum");
  }
  return r;
}

QueueLengths queue_lengths(const AlphaMatrix& alpha, double rate, double capacity) {
  if (!(rate >= 0.0) || !(capacity > 0.0)) throw InvalidParams("need R >= 0 and C > 0");
  const double load = rate / capacity * alpha.row_sums.maxCoeff();
  if (load >= 1.0) {
    throw CongestedError("R = " + std::to_string(rate) + " is at or above the capacity " +
                         std::to_string(capacity / alpha.row_sums.maxCoeff()));
  }
  QueueLengths q;
  q.per_vertex = rate * alpha.row_sums;
  q.total = q.per_vertex.sum();
  q.time_ratio = rate > 0.0 ? q.total / rate : alpha.alpha0.sum();
  return q;
}

double approx_capacity(const Graph& g, const StationaryDistribution& pi) {
  const std::size_t n = g.size();
  if (pi.pi.size() != n) throw InvalidParams("stationary distribution order does not match graph");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double neighborhood = 0.0;
    for (Vertex j : g.neighbors(static_cast<Vertex>(i))) neighborhood += pi.pi[j];
    sum += 1.0 / neighborhood;
  }
  return static_cast<double>(n) / (pi.pi_max * sum);
}

BoundsReport bounds_report(const CapacityReport& report, const DegreeStats& stats, double z,
                           const StationaryDistribution& pi) {
  BoundsReport b;
  const double n = static_cast<double>(report.n);
  b.t0rc0 = {report.t0 * report.rc0, 1.0, report.t0 * report.rc0 <= 1.0 + kBoundSlack, true};
  b.harmonic = {report.rc0, stats.harmonic_bound, report.rc0 <= stats.harmonic_bound, false};
  b.diameter_capacity = {report.rc0, n / z, report.rc0 <= n / z + 1e-9, false};
  b.diameter_time = {report.mean_time, z, report.mean_time >= z - 1e-9, false};
  b.eq5_ratio = report.mean_time * pi.pi_max * report.rc0;
  return b;
}

}  // namespace netcap
