#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include "netcap/analysis.hpp"
#include "netcap/errors.hpp"
#include "netcap/parallel.hpp"
#include "netcap/report_io.hpp"
#include "netcap/simulator.hpp"

#ifndef NETCAP_VERSION
#define NETCAP_VERSION "dev"
#endif

namespace netcap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  return f;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  return f;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension(suffix);
  return p;
}

Graph read_graph(const std::string& path, bool reindex) {
  auto in = open_in(path);
  return load_edge_list(in, {reindex});
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  json parameters = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void write(const fs::path& out) const {
    json j;
    j["command"] = command;
    j["argv"] = argv;
    j["parameters"] = parameters;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["seed"] = seed ? json(*seed) : json(nullptr);
    j["tool_version"] = NETCAP_VERSION;
    j["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    auto f = open_out(sibling(out, ".manifest.json"));
    f << j.dump(2) << '\n';
  }
};

// Options shared by the commands that take a graph and a routing.
struct RoutingArgs {
  std::string graph;
  std::string routing = "walk";
  double beta = 0.0;
  bool reindex = false;

  void add(CLI::App* app) {
    app->add_option("--graph", graph, "Edge-list file")->required();
    app->add_option("--routing", routing,
                    "walk | degree-biased[:<beta>] | shortest-path | matrix:<path>")
        ->capture_default_str();
    app->add_option("--beta", beta, "Degree-bias exponent for a bare degree-biased routing")
        ->capture_default_str();
    app->add_flag("--reindex", reindex, "Compact sparse vertex ids");
  }
  json to_json() const {
    return {{"graph", graph}, {"routing", routing}, {"beta", beta}, {"reindex", reindex}};
  }
};

struct SimArgs {
  std::size_t capacity = 1;
  double rate = 0.0;
  std::size_t avoid = 1;
  std::uint64_t seed = 1;
  std::size_t warmup = 20'000;
  std::size_t measure = 30'000;

  void add(CLI::App* app, bool with_rate) {
    app->add_option("--capacity,-C", capacity, "Packets served per vertex per step")->capture_default_str();
    if (with_rate) app->add_option("--rate,-R", rate, "Packets generated per step")->capture_default_str();
    app->add_option("--avoid", avoid, "n-avoiding memory depth")->capture_default_str();
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_option("--warmup", warmup, "Warmup steps")->capture_default_str();
    app->add_option("--measure", measure, "Measurement steps")->capture_default_str();
  }
  SimConfig config() const {
    SimConfig c;
    c.capacity = capacity;
    c.rate = rate;
    c.avoid = avoid;
    c.seed = seed;
    c.warmup_steps = warmup;
    c.measure_steps = measure;
    return c;
  }
  json to_json() const {
    return {{"capacity", capacity}, {"rate", rate},       {"avoid", avoid},
            {"seed", seed},         {"warmup", warmup},   {"measure", measure}};
  }
};

double analytic_rc(const Graph& g, const RoutingSpec& routing, std::size_t capacity) {
  return static_cast<double>(capacity) * capacity_report(solve_alpha(g, routing)).rc0;
}

int cmd_generate(std::size_t n, std::size_t m, std::uint64_t seed, const std::string& out_path,
                 Manifest& manifest, std::ostream& out) {
  const Graph g = generate_ba(n, m, seed);
  {
    auto f = open_out(out_path);
    f << "# BA graph n=" << n << " m=" << m << " seed=" << seed << '\n';
    write_edge_list(f, g);
  }
  const auto stats = degree_stats(g);
  manifest.parameters = {{"n", n}, {"m", m}, {"seed", seed}};
  manifest.parameters["stats"] = {{"edges", g.edge_count()},
                                  {"mean_degree", stats.mean_degree},
                                  {"harmonic_bound", stats.harmonic_bound},
                                  {"max_degree", stats.max_degree}};
  manifest.seed = seed;
  manifest.outputs = {out_path};
  manifest.write(out_path);
  out << "wrote " << g.size() << " vertices, " << g.edge_count() << " edges, <k> = "
      << stats.mean_degree << " to " << out_path << '\n';
  return kOk;
}

int cmd_analyze(const RoutingArgs& ra, const std::string& method, double tol,
                const std::string& out_path, const std::string& alpha_out, Manifest& manifest,
                std::ostream& out) {
  const Graph g = read_graph(ra.graph, ra.reindex);
  const RoutingSpec routing = build_routing(g, ra.routing, ra.beta);
  SolveOptions opts;
  opts.method = parse_solve_method(method);
  opts.tol = tol;
  const AnalysisBundle bundle = analyze(g, routing, ra.routing, opts);
  {
    auto f = open_out(out_path);
    f << std::setprecision(17) << to_json(bundle).dump(2) << '\n';
  }
  manifest.parameters = ra.to_json();
  manifest.parameters["method"] = method;
  manifest.parameters["tol"] = tol;
  manifest.inputs = {ra.graph};
  manifest.outputs = {out_path};
  if (!alpha_out.empty()) {
    auto f = open_out(alpha_out);
    write_matrix_csv(f, bundle.alpha.alpha0);
    manifest.outputs.push_back(alpha_out);
  }
  manifest.write(out_path);
  out << std::setprecision(10) << "rc0 = " << bundle.capacity.rc0
      << "  T = " << bundle.capacity.mean_time << "  t0*rc0 = " << bundle.bounds.t0rc0.value
      << "  residual = " << bundle.alpha.residual << '\n';
  return kOk;
}

int cmd_simulate(const RoutingArgs& ra, const SimArgs& sa, const std::string& out_path,
                 std::string trace_out, Manifest& manifest, std::ostream& out) {
  const Graph g = read_graph(ra.graph, ra.reindex);
  const RoutingSpec routing = build_routing(g, ra.routing, ra.beta);
  const SimConfig cfg = sa.config();
  const SimResult res = simulate(g, routing, cfg);
  if (trace_out.empty()) trace_out = sibling(out_path, ".w.csv").string();
  {
    auto f = open_out(out_path);
    f << std::setprecision(17) << to_json(res, cfg).dump(2) << '\n';
  }
  {
    auto f = open_out(trace_out);
    write_w_trace_csv(f, res.w_trace);
  }
  manifest.parameters = ra.to_json();
  manifest.parameters.update(sa.to_json());
  manifest.seed = sa.seed;
  manifest.inputs = {ra.graph};
  manifest.outputs = {out_path, trace_out};
  manifest.write(out_path);
  out << std::setprecision(8) << "eta = " << res.eta << "  mean delivery time = " << res.mean_delivery_time
      << "  mean W = " << res.mean_in_flight << '\n';
  return kOk;
}

struct SweepRow {
  double rate = 0.0;
  double relative = 0.0;
  std::uint64_t seed = 0;
  double eta = 0.0;
  double queue_total = 0.0;
  double delivery_time = 0.0;
};

int cmd_sweep(const RoutingArgs& ra, const SimArgs& sa, std::vector<double> rates,
              std::vector<double> relative, std::size_t seeds, std::size_t workers,
              const std::string& out_path, Manifest& manifest, std::ostream& out) {
  if (rates.empty() == relative.empty()) {
    throw InvalidParams("give exactly one of --rates or --relative-rates");
  }
  if (seeds == 0) throw InvalidParams("--seeds must be at least 1");
  const Graph g = read_graph(ra.graph, ra.reindex);
  const RoutingSpec routing = build_routing(g, ra.routing, ra.beta);
  const double rc = analytic_rc(g, routing, sa.capacity);
  if (rates.empty()) {
    for (double r : relative) rates.push_back(r * rc);
  } else {
    for (double r : rates) relative.push_back(r / rc);
  }

  std::vector<SweepRow> rows(rates.size() * seeds);
  parallel_chunks(rows.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t job = begin; job < end; ++job) {
      const std::size_t point = job / seeds;
      SimConfig cfg = sa.config();
      cfg.rate = rates[point];
      cfg.seed = sa.seed + job % seeds;
      const SimResult res = simulate(g, routing, cfg);
      double total = 0.0;
      for (double q : res.mean_queue_lengths) total += q;
      rows[job] = {rates[point], relative[point], cfg.seed, res.eta, total, res.mean_delivery_time};
    }
  });

  auto f = open_out(out_path);
  f << std::setprecision(12);
  f << "kind,rate,relative_rate,seed,eta,L,T,eta_se,L_se,T_se\n";
  for (const auto& r : rows) {
    f << "seed," << r.rate << ',' << r.relative << ',' << r.seed << ',' << r.eta << ','
      << r.queue_total << ',' << r.delivery_time << ",,,\n";
  }
  for (std::size_t point = 0; point < rates.size(); ++point) {
    auto stat = [&](auto field) {
      double mean = 0.0;
      for (std::size_t s = 0; s < seeds; ++s) mean += rows[point * seeds + s].*field;
      mean /= static_cast<double>(seeds);
      double var = 0.0;
      for (std::size_t s = 0; s < seeds; ++s) {
        const double d = rows[point * seeds + s].*field - mean;
        var += d * d;
      }
      const double se = seeds > 1 ? std::sqrt(var / static_cast<double>(seeds - 1) / static_cast<double>(seeds)) : 0.0;
      return std::pair{mean, se};
    };
    const auto [eta, eta_se] = stat(&SweepRow::eta);
    const auto [len, len_se] = stat(&SweepRow::queue_total);
    const auto [time, time_se] = stat(&SweepRow::delivery_time);
    f << "mean," << rates[point] << ',' << relative[point] << ",," << eta << ',' << len << ','
      << time << ',' << eta_se << ',' << len_se << ',' << time_se << '\n';
  }
  manifest.parameters = ra.to_json();
  manifest.parameters.update(sa.to_json());
  manifest.parameters["rates"] = rates;
  manifest.parameters["relative_rates"] = relative;
  manifest.parameters["seeds"] = seeds;
  manifest.parameters["analytic_rc"] = rc;
  manifest.seed = sa.seed;
  manifest.inputs = {ra.graph};
  manifest.outputs = {out_path};
  manifest.write(out_path);
  out << "wrote " << rows.size() + rates.size() << " rows to " << out_path << " (analytic Rc = " << rc
      << ")\n";
  return kOk;
}

int cmd_estimate_rc(const RoutingArgs& ra, const SimArgs& sa, const std::vector<double>& bracket,
                    double resolution, double threshold, const std::string& out_path,
                    Manifest& manifest, std::ostream& out) {
  const Graph g = read_graph(ra.graph, ra.reindex);
  const RoutingSpec routing = build_routing(g, ra.routing, ra.beta);
  const RcEstimate est =
      estimate_rc(g, routing, sa.config(), bracket.at(0), bracket.at(1), resolution, threshold);
  const double analytic = analytic_rc(g, routing, sa.capacity);
  json j;
  j["rc"] = est.rc;
  j["low"] = est.low;
  j["high"] = est.high;
  j["analytic_rc"] = analytic;
  j["relative_difference"] = (est.rc - analytic) / analytic;
  j["probes"] = json::array();
  for (const auto& p : est.probes) {
    j["probes"].push_back({{"rate", p.rate}, {"eta", p.eta}, {"congested", p.congested}});
  }
  {
    auto f = open_out(out_path);
    f << std::setprecision(17) << j.dump(2) << '\n';
  }
  manifest.parameters = ra.to_json();
  manifest.parameters.update(sa.to_json());
  manifest.parameters["bracket"] = bracket;
  manifest.parameters["resolution"] = resolution;
  manifest.parameters["eta_threshold"] = threshold;
  manifest.seed = sa.seed;
  manifest.inputs = {ra.graph};
  manifest.outputs = {out_path};
  manifest.write(out_path);
  out << std::setprecision(8) << "Rc ~ " << est.rc << " (analytic " << analytic << ")\n";
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.error_class()) {
    case ErrorClass::Validation:
      return kValidation;
    case ErrorClass::Numerical:
      return kNumerical;
    case ErrorClass::Io:
      return kIo;
  }
  return kValidation;
}

}  // namespace

RoutingSpec build_routing(const Graph& g, std::string_view spec, double beta) {
  if (spec == "walk") return RoutingSpec::local(uniform_random_walk(g));
  if (spec == "shortest-path") return shortest_path_routing(g);
  if (spec == "degree-biased") return RoutingSpec::local(degree_biased(g, beta));
  if (spec.starts_with("degree-biased:")) {
    const std::string value(spec.substr(std::string_view("degree-biased:").size()));
    std::size_t used = 0;
    double b = 0.0;
    try {
      b = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw InvalidParams("bad degree-bias exponent '" + value + "'");
    return RoutingSpec::local(degree_biased(g, b));
  }
  if (spec.starts_with("matrix:")) {
    const std::string path(spec.substr(std::string_view("matrix:").size()));
    auto in = open_in(path);
    TransitionMatrix p = read_transition_matrix(in, g.size());
    if (auto rep = validate_consistency(p, g); !rep) {
      std::string msg = "custom matrix is inconsistent with the graph";
      for (const auto& problem : rep.problems) msg += "\n  " + problem;
      throw ValidationError(msg);
    }
    return RoutingSpec::local(std::move(p));
  }
  throw InvalidParams("unknown routing '" + std::string(spec) + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capacity analysis and packet simulation for static routings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NETCAP_VERSION);

  Manifest manifest;
  manifest.argv = args;

  std::size_t gen_n = 0, gen_m = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Generate a Barabasi-Albert graph");
  gen->add_option("--n", gen_n, "Vertex count")->required();
  gen->add_option("--m", gen_m, "Edges per new vertex")->required();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Edge-list output path")->required();

  RoutingArgs an_routing;
  std::string an_method = "direct", an_out, an_alpha;
  double an_tol = 1e-12;
  auto* an = app.add_subcommand("analyze", "Solve the occupancy equation and report capacity");
  an_routing.add(an);
  an->add_option("--method", an_method, "direct | neumann")->capture_default_str();
  an->add_option("--tol", an_tol, "Solver tolerance")->capture_default_str();
  an->add_option("--out", an_out, "JSON report path")->required();
  an->add_option("--alpha-out", an_alpha, "Optional CSV path for the occupancy matrix");

  RoutingArgs sim_routing;
  SimArgs sim_args;
  std::string sim_out, sim_trace;
  auto* sim = app.add_subcommand("simulate", "Run the packet simulator");
  sim_routing.add(sim);
  sim_args.add(sim, true);
  sim->add_option("--out", sim_out, "JSON result path")->required();
  sim->add_option("--trace-out", sim_trace, "W(t) CSV path (default: <out>.w.csv)");

  RoutingArgs sw_routing;
  SimArgs sw_args;
  std::vector<double> sw_rates, sw_relative;
  std::size_t sw_seeds = 1, sw_workers = 0;
  std::string sw_out;
  auto* sw = app.add_subcommand("sweep", "Simulate over a grid of generation rates");
  sw_routing.add(sw);
  sw_args.add(sw, false);
  sw->add_option("--rates", sw_rates, "Absolute rates R")->delimiter(',');
  sw->add_option("--relative-rates", sw_relative, "Rates as multiples of the analytic Rc")->delimiter(',');
  sw->add_option("--seeds", sw_seeds, "Seeds per grid point")->capture_default_str();
  sw->add_option("--workers", sw_workers, "Worker threads (default: NETCAP_WORKERS or cores)");
  sw->add_option("--out", sw_out, "CSV output path")->required();

  RoutingArgs rc_routing;
  SimArgs rc_args;
  std::vector<double> rc_bracket;
  double rc_resolution = 0.05, rc_threshold = 0.05;
  std::string rc_out;
  auto* rcc = app.add_subcommand("estimate-rc", "Locate the congestion transition by bisection");
  rc_routing.add(rcc);
  rc_args.add(rcc, false);
  rcc->add_option("--bracket", rc_bracket, "Low and high rates")->expected(2)->required();
  rcc->add_option("--resolution", rc_resolution, "Bracket width to stop at")->capture_default_str();
  rcc->add_option("--threshold", rc_threshold, "eta above which a probe is congested")->capture_default_str();
  rcc->add_option("--out", rc_out, "JSON output path")->required();

  std::string replay_manifest;
  auto* rep = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  rep->add_option("manifest", replay_manifest, "Manifest JSON path")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << NETCAP_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream help;
    app.exit(e, help, err);
    return kValidation;
  }

  try {
    if (*gen) {
      manifest.command = "generate";
      return cmd_generate(gen_n, gen_m, gen_seed, gen_out, manifest, out);
    }
    if (*an) {
      manifest.command = "analyze";
      return cmd_analyze(an_routing, an_method, an_tol, an_out, an_alpha, manifest, out);
    }
    if (*sim) {
      manifest.command = "simulate";
      return cmd_simulate(sim_routing, sim_args, sim_out, sim_trace, manifest, out);
    }
    if (*sw) {
      manifest.command = "sweep";
      return cmd_sweep(sw_routing, sw_args, sw_rates, sw_relative, sw_seeds, sw_workers, sw_out,
                       manifest, out);
    }
    if (*rcc) {
      manifest.command = "estimate-rc";
      return cmd_estimate_rc(rc_routing, rc_args, rc_bracket, rc_resolution, rc_threshold, rc_out,
                             manifest, out);
    }
    if (*rep) {
      auto in = open_in(replay_manifest);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ParseError("manifest '" + replay_manifest + "': " + e.what());
      }
      if (!j.contains("argv") || !j["argv"].is_array()) throw ParseError("manifest has no argv");
      auto argv = j["argv"].get<std::vector<std::string>>();
      if (!argv.empty() && argv.front() == "replay") throw ParseError("manifest replays itself");
      return run(argv, out, err);
    }
  } catch (const BadBracket& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}

}  // namespace netcap::cli
