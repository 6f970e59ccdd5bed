#include "netcap/report_io.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "netcap/errors.hpp"

namespace netcap {

namespace {

TransitionMatrix averaged_matrix(const RoutingSpec& routing) {
  if (routing.kind() == RoutingKind::Local) return routing.for_destination(0);
  const std::size_t n = routing.size();
  std::vector<std::vector<TransitionMatrix::Entry>> rows(n);
  const double w = 1.0 / static_cast<double>(n);
  for (const auto& p : routing.matrices())
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& e : p.row(static_cast<Vertex>(i))) rows[i].push_back({e.col, e.p * w});
  return TransitionMatrix(n, std::move(rows));
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

nlohmann::json bound_json(const BoundCheck& b) {
  return {{"value", b.value}, {"limit", b.limit}, {"holds", b.holds}, {"hard", b.hard}};
}

// NaN is not representable in JSON.
nlohmann::json nullable(const std::vector<double>& v) {
  auto arr = nlohmann::json::array();
  for (double x : v) arr.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
  return arr;
}

}  // namespace

AnalysisBundle analyze(const Graph& g, const RoutingSpec& routing, std::string routing_name,
                       const SolveOptions& options) {
  AnalysisBundle b;
  b.routing_kind = routing.kind();
  b.routing_name = std::move(routing_name);
  b.alpha = solve_alpha(g, routing, options);
  b.capacity = capacity_report(b.alpha);
  b.degrees = degree_stats(g);
  b.z = average_shortest_path_length(g);
  StationaryOptions so;
  so.max_iterations = 200'000;
  try {
    b.stationary = stationary_distribution(averaged_matrix(routing), so);
  } catch (const NonConvergent&) {
    so.method = StationaryMethod::Direct;
    b.stationary = stationary_distribution(averaged_matrix(routing), so);
  }
  b.approx_rc0 = approx_capacity(g, b.stationary);
  b.bounds = bounds_report(b.capacity, b.degrees, b.z, b.stationary);
  return b;
}

nlohmann::json to_json(const AnalysisBundle& b) {
  const auto& c = b.capacity;
  nlohmann::json j;
  j["n"] = c.n;
  j["routing_kind"] = std::string(to_string(b.routing_kind));
  j["routing"] = b.routing_name;
  j["rc0"] = c.rc0;
  j["T"] = c.mean_time;
  j["t0"] = c.t0;
  j["T_s"] = to_vector(c.per_destination_time);
  j["s0"] = to_vector(c.row_sums);
  j["betweenness"] = to_vector(c.betweenness);
  j["b_max"] = c.b_max;
  j["b_mean"] = c.b_mean;
  j["rc0_from_betweenness"] = c.rc0_from_betweenness;
  j["approx_rc0"] = b.approx_rc0;
  j["pi_max"] = b.stationary.pi_max;
  j["z"] = b.z;
  j["degree_stats"] = {{"mean_degree", b.degrees.mean_degree},
                       {"mean_inverse_degree", b.degrees.mean_inverse_degree},
                       {"harmonic_bound", b.degrees.harmonic_bound},
                       {"min_degree", b.degrees.min_degree},
                       {"max_degree", b.degrees.max_degree}};
  j["bounds"] = {{"t0rc0", bound_json(b.bounds.t0rc0)},
                 {"harmonic", bound_json(b.bounds.harmonic)},
                 {"diameter",
                  {{"capacity", bound_json(b.bounds.diameter_capacity)},
                   {"time", bound_json(b.bounds.diameter_time)}}},
                 {"eq5_ratio", b.bounds.eq5_ratio}};
  j["solver"] = {{"method", std::string(to_string(b.alpha.method))},
                 {"tol", b.alpha.tol},
                 {"residual", b.alpha.residual}};
  return j;
}

nlohmann::json to_json(const SimResult& r, const SimConfig& config) {
  nlohmann::json j;
  j["config"] = {{"capacity", config.capacity}, {"rate", config.rate},
                 {"avoid", config.avoid},       {"seed", config.seed},
                 {"warmup_steps", config.warmup_steps}, {"measure_steps", config.measure_steps}};
  j["eta"] = r.eta;
  j["generated_count"] = r.generated_count;
  j["delivered_count"] = r.delivered_count;
  j["in_flight_at_end"] = r.w_trace.empty() ? 0 : r.w_trace.back();
  j["measured_deliveries"] = r.measured_deliveries;
  j["mean_delivery_time"] = r.mean_delivery_time;
  j["mean_in_flight"] = r.mean_in_flight;
  j["mean_queue_lengths"] = r.mean_queue_lengths;
  j["total_queue_length"] = [&] {
    double s = 0.0;
    for (double q : r.mean_queue_lengths) s += q;
    return s;
  }();
  j["per_destination_delivery_time"] = nullable(r.per_destination_delivery_time);
  j["per_destination_deliveries"] = r.per_destination_deliveries;
  j["warnings"] = r.warnings;
  return j;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      if (k) out << ',';
      out << m(i, k);
    }
    out << '\n';
  }
}

void write_w_trace_csv(std::ostream& out, std::span<const std::size_t> w_trace) {
  out << "t,W\n";
  for (std::size_t t = 0; t < w_trace.size(); ++t) out << t << ',' << w_trace[t] << '\n';
}

}  // namespace netcap
