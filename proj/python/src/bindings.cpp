#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "netcap/analysis.hpp"
#include "netcap/errors.hpp"
#include "netcap/graph.hpp"
#include "netcap/report_io.hpp"
#include "netcap/routing.hpp"
#include "netcap/simulator.hpp"

namespace py = pybind11;
using namespace netcap;

namespace {

Graph graph_from_pairs(std::size_t n, const std::vector<std::pair<Vertex, Vertex>>& pairs,
                       bool require_connected) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto [u, v] : pairs) edges.push_back({u, v});
  return Graph::from_edges(n, edges, require_connected);
}

TransitionMatrix matrix_from_dense(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidParams("transition matrix must be square");
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<std::vector<TransitionMatrix::Entry>> rows(n);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) rows[i].push_back({static_cast<Vertex>(j), m(i, j)});
  return TransitionMatrix(n, std::move(rows));
}

Eigen::MatrixXd dense(const TransitionMatrix& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  const auto flat = p.to_dense();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = flat[i * n + j];
  return m;
}

py::dict bound_dict(const BoundCheck& b) {
  py::dict d;
  d["value"] = b.value;
  d["limit"] = b.limit;
  d["holds"] = b.holds;
  d["hard"] = b.hard;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transport capacity of static routings on graphs";

  auto base = py::register_exception<Error>(m, "NetcapError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SelfLoopError>(m, "SelfLoopError", base.ptr());
  py::register_exception<DisconnectedError>(m, "DisconnectedError", base.ptr());
  py::register_exception<InvalidParams>(m, "InvalidParams", base.ptr());
  py::register_exception<CongestedError>(m, "CongestedError", base.ptr());
  py::register_exception<DegenerateWindow>(m, "DegenerateWindow", base.ptr());
  py::register_exception<NonConvergent>(m, "NonConvergent", base.ptr());
  py::register_exception<SingularSystem>(m, "SingularSystem", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<BadBracket>(m, "BadBracket", base.ptr());

  py::class_<Graph>(m, "Graph")
      .def_static("from_edges", &graph_from_pairs, py::arg("n"), py::arg("edges"),
                  py::arg("require_connected") = true)
      .def_static("parse", [](const std::string& text, bool reindex) {
        return parse_edge_list(text, {reindex});
      }, py::arg("text"), py::arg("reindex") = false)
      .def("__len__", &Graph::size)
      .def_property_readonly("n", &Graph::size)
      .def_property_readonly("edge_count", &Graph::edge_count)
      .def("edges", [](const Graph& g) {
        std::vector<std::pair<Vertex, Vertex>> out;
        for (const auto& e : g.edges()) out.emplace_back(e.u, e.v);
        return out;
      })
      .def("neighbors", [](const Graph& g, Vertex v) {
        if (v < 0 || static_cast<std::size_t>(v) >= g.size()) throw py::index_error();
        auto s = g.neighbors(v);
        return std::vector<Vertex>(s.begin(), s.end());
      })
      .def("degrees", &Graph::degrees)
      .def_property_readonly("labels", &Graph::labels)
      .def("to_text", [](const Graph& g) {
        std::ostringstream s;
        write_edge_list(s, g);
        return s.str();
      });

  m.def("generate_ba", &generate_ba, py::arg("n"), py::arg("m"), py::arg("seed") = 1);
  m.def("complete_graph", &complete_graph);
  m.def("path_graph", &path_graph);
  m.def("star_graph", &star_graph);
  m.def("cycle_graph", &cycle_graph);
  m.def("average_shortest_path_length", &average_shortest_path_length);
  m.def("degree_stats", [](const Graph& g) {
    const auto s = degree_stats(g);
    py::dict d;
    d["mean_degree"] = s.mean_degree;
    d["mean_inverse_degree"] = s.mean_inverse_degree;
    d["harmonic_bound"] = s.harmonic_bound;
    d["min_degree"] = s.min_degree;
    d["max_degree"] = s.max_degree;
    return d;
  });

  py::class_<TransitionMatrix>(m, "TransitionMatrix")
      .def_static("from_dense", &matrix_from_dense)
      .def("dense", &dense)
      .def_property_readonly("n", &TransitionMatrix::size);

  py::class_<RoutingSpec>(m, "Routing")
      .def_static("local", &RoutingSpec::local)
      .def_static("per_destination", &RoutingSpec::global)
      .def_property_readonly("kind", [](const RoutingSpec& r) { return std::string(to_string(r.kind())); })
      .def("matrix", [](const RoutingSpec& r, Vertex x) { return dense(r.for_destination(x)); },
           py::arg("destination") = 0);

  m.def("random_walk", [](const Graph& g) { return RoutingSpec::local(uniform_random_walk(g)); });
  m.def("degree_biased", [](const Graph& g, double beta) {
    return RoutingSpec::local(degree_biased(g, beta));
  }, py::arg("g"), py::arg("beta"));
  m.def("random_weighted", [](const Graph& g, std::uint64_t seed) {
    return RoutingSpec::local(random_weighted(g, seed));
  }, py::arg("g"), py::arg("seed"));
  m.def("shortest_path", &shortest_path_routing);
  m.def("check_consistency", [](const RoutingSpec& r, const Graph& g) {
    return validate_consistency(r, g).problems;
  });
  m.def("stationary", [](const RoutingSpec& r) {
    return stationary_distribution(r.for_destination(0)).pi;
  });

  py::class_<AlphaMatrix>(m, "Alpha")
      .def_readonly("alpha0", &AlphaMatrix::alpha0)
      .def_readonly("row_sums", &AlphaMatrix::row_sums)
      .def_readonly("residual", &AlphaMatrix::residual);

  m.def("solve_alpha", [](const Graph& g, const RoutingSpec& r, const std::string& method,
                          double tol, std::size_t workers) {
    SolveOptions o;
    o.method = parse_solve_method(method);
    o.tol = tol;
    o.workers = workers;
    py::gil_scoped_release release;
    return solve_alpha(g, r, o);
  }, py::arg("g"), py::arg("routing"), py::arg("method") = "direct", py::arg("tol") = 1e-12,
     py::arg("workers") = 0);

  m.def("queue_lengths", [](const AlphaMatrix& a, double rate, double capacity) {
    return queue_lengths(a, rate, capacity).per_vertex;
  }, py::arg("alpha"), py::arg("rate"), py::arg("capacity") = 1.0);

  m.def("analyze", [](const Graph& g, const RoutingSpec& r, const std::string& name,
                      const std::string& method) {
    SolveOptions o;
    o.method = parse_solve_method(method);
    AnalysisBundle b;
    {
      py::gil_scoped_release release;
      b = analyze(g, r, name, o);
    }
    py::dict d;
    const auto& c = b.capacity;
    d["rc0"] = c.rc0;
    d["T"] = c.mean_time;
    d["t0"] = c.t0;
    d["T_s"] = c.per_destination_time;
    d["s0"] = c.row_sums;
    d["betweenness"] = c.betweenness;
    d["approx_rc0"] = b.approx_rc0;
    d["pi_max"] = b.stationary.pi_max;
    d["z"] = b.z;
    d["eq5_ratio"] = b.bounds.eq5_ratio;
    d["bounds"] = py::dict(py::arg("t0rc0") = bound_dict(b.bounds.t0rc0),
                           py::arg("harmonic") = bound_dict(b.bounds.harmonic),
                           py::arg("diameter_capacity") = bound_dict(b.bounds.diameter_capacity),
                           py::arg("diameter_time") = bound_dict(b.bounds.diameter_time));
    d["residual"] = b.alpha.residual;
    return d;
  }, py::arg("g"), py::arg("routing"), py::arg("name") = "", py::arg("method") = "direct");

  py::class_<SimResult>(m, "SimResult")
      .def_readonly("w_trace", &SimResult::w_trace)
      .def_readonly("eta", &SimResult::eta)
      .def_readonly("generated_count", &SimResult::generated_count)
      .def_readonly("delivered_count", &SimResult::delivered_count)
      .def_readonly("measured_deliveries", &SimResult::measured_deliveries)
      .def_readonly("warnings", &SimResult::warnings)
      .def_readonly("mean_delivery_time", &SimResult::mean_delivery_time)
      .def_readonly("mean_queue_lengths", &SimResult::mean_queue_lengths)
      .def_readonly("per_destination_delivery_time", &SimResult::per_destination_delivery_time)
      .def_readonly("head_occupancy", &SimResult::head_occupancy)
      .def_readonly("mean_in_flight", &SimResult::mean_in_flight);

  m.def("simulate", [](const Graph& g, const RoutingSpec& r, double rate, std::size_t capacity,
                       std::size_t avoid, std::uint64_t seed, std::size_t warmup, std::size_t measure) {
    SimConfig c;
    c.rate = rate;
    c.capacity = capacity;
    c.avoid = avoid;
    c.seed = seed;
    c.warmup_steps = warmup;
    c.measure_steps = measure;
    py::gil_scoped_release release;
    return simulate(g, r, c);
  }, py::arg("g"), py::arg("routing"), py::arg("rate"), py::arg("capacity") = 1,
     py::arg("avoid") = 1, py::arg("seed") = 1, py::arg("warmup") = 20000, py::arg("measure") = 30000);

  m.def("order_parameter", [](const std::vector<std::size_t>& w, double capacity, double rate) {
    return order_parameter(w, 0, w.size(), capacity, rate);
  }, py::arg("w_trace"), py::arg("capacity"), py::arg("rate"));

#ifdef VERSION_INFO
#define NETCAP_STR_(x) #x
#define NETCAP_STR(x) NETCAP_STR_(x)
  m.attr("__version__") = NETCAP_STR(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
