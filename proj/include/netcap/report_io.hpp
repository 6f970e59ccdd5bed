#pragma once

#include <iosfwd>
#include <json.hpp>
#include <span>
#include <string>

#include "netcap/analysis.hpp"
#include "netcap/simulator.hpp"

namespace netcap {

// Everything cmd_analyze reports about one graph + routing.
struct AnalysisBundle {
  RoutingKind routing_kind = RoutingKind::Local;
  std::string routing_name;
  AlphaMatrix alpha;
  CapacityReport capacity;
  DegreeStats degrees;
  double z = 0.0;
  StationaryDistribution stationary;
  double approx_rc0 = 0.0;
  BoundsReport bounds;
};

// Runs the full analysis pipeline. The stationary law is taken from the local
// matrix, or from the destination-averaged matrix for global routings.
AnalysisBundle analyze(const Graph& g, const RoutingSpec& routing, std::string routing_name,
                       const SolveOptions& options = {});

nlohmann::json to_json(const AnalysisBundle& bundle);
nlohmann::json to_json(const SimResult& result, const SimConfig& config);

// Dense matrix, one row per line, full double precision.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
// Two columns "t,W" with a header line.
void write_w_trace_csv(std::ostream& out, std::span<const std::size_t> w_trace);

}  // namespace netcap
