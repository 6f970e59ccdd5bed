#include <doctest.h>

#include <cli.hpp>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "netcap/graph.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using netcap::cli::run;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("netcap_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return path(name);
  }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  return json::parse(f);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("generate") {
  Sandbox box;
  auto k5 = call({"generate", "--n", "5", "--m", "4", "--out", box.path("k5.txt")});
  REQUIRE(k5.code == 0);
  auto g = netcap::parse_edge_list(slurp(box.path("k5.txt")));
  CHECK(g.edge_count() == 10);

  auto big = call({"generate", "--n", "600", "--m", "5", "--seed", "7", "--out", box.path("ba.txt")});
  REQUIRE(big.code == 0);
  auto m = read_json(box.path("ba.manifest.json"));
  CHECK(m["command"] == "generate");
  CHECK(m["seed"] == 7);
  CHECK(m["parameters"]["stats"]["mean_degree"].get<double>() == doctest::Approx(9.95));
  CHECK(m["outputs"][0] == box.path("ba.txt"));

  CHECK(call({"generate", "--n", "3", "--m", "5", "--out", box.path("bad.txt")}).code == 2);
  CHECK(call({"generate", "--n", "3"}).code == 2);
}

TEST_CASE("analyze") {
  Sandbox box;
  auto star = box.write("star.txt", "0 1\n0 2\n0 3\n0 4\n");
  auto r = call({"analyze", "--graph", star, "--routing", "walk", "--out", box.path("star.json"),
                 "--alpha-out", box.path("alpha.csv")});
  REQUIRE(r.code == 0);
  auto j = read_json(box.path("star.json"));
  CHECK(j["rc0"].get<double>() == doctest::Approx(1.25));
  CHECK(j["T"].get<double>() == doctest::Approx(1.6));
  CHECK(j["n"] == 5);
  CHECK(j["routing_kind"] == "local");
  CHECK(j["bounds"]["t0rc0"]["value"].get<double>() == doctest::Approx(0.4));
  CHECK(j["betweenness"][0].get<double>() == doctest::Approx(16.0));
  CHECK(j["solver"]["method"] == "direct");
  CHECK(fs::exists(box.path("star.manifest.json")));
  std::istringstream csv(slurp(box.path("alpha.csv")));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 5);

  auto path = box.write("path.txt", "0 1\n1 2\n");
  REQUIRE(call({"analyze", "--graph", path, "--routing", "shortest-path", "--method", "neumann", "--out",
                box.path("path.json")}).code == 0);
  auto p = read_json(box.path("path.json"));
  CHECK(p["rc0"].get<double>() == doctest::Approx(1.5));
  CHECK(p["T"].get<double>() == doctest::Approx(4.0 / 3.0));
  CHECK(p["bounds"]["diameter"]["time"]["value"].get<double>() ==
        doctest::Approx(p["bounds"]["diameter"]["time"]["limit"].get<double>()));

  REQUIRE(call({"analyze", "--graph", star, "--routing", "degree-biased:-1", "--out", box.path("db.json")}).code == 0);
  CHECK(read_json(box.path("db.json"))["rc0"].get<double>() == doctest::Approx(1.25));
}

TEST_CASE("analyze rejects bad inputs") {
  Sandbox box;
  auto path = box.write("path.txt", "0 1\n1 2\n");
  auto matrix = box.write("p.csv", "0,0.5,0.5\n0.5,0,0.5\n0,1,0\n");
  auto bad = call({"analyze", "--graph", path, "--routing", "matrix:" + matrix, "--out", box.path("x.json")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("p[0][2]") != std::string::npos);

  auto good = box.write("q.csv", "0,1,0\n0.25,0,0.75\n0,1,0\n");
  CHECK(call({"analyze", "--graph", path, "--routing", "matrix:" + good, "--out", box.path("q.json")}).code == 0);

  CHECK(call({"analyze", "--graph", box.path("missing.txt"), "--out", box.path("x.json")}).code == 4);
  auto split = box.write("split.txt", "0 1\n2 3\n");
  CHECK(call({"analyze", "--graph", split, "--out", box.path("x.json")}).code == 2);
  auto junk = box.write("junk.txt", "0 one\n");
  CHECK(call({"analyze", "--graph", junk, "--out", box.path("x.json")}).code == 2);
  CHECK(call({"analyze", "--graph", path, "--routing", "zigzag", "--out", box.path("x.json")}).code == 2);
  CHECK(call({"analyze", "--graph", path, "--method", "magic", "--out", box.path("x.json")}).code == 2);
}

TEST_CASE("simulate") {
  Sandbox box;
  auto k4 = box.write("k4.txt", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
  auto r = call({"simulate", "--graph", k4, "--capacity", "1", "--rate", "0.5", "--seed", "3", "--out",
                 box.path("sim.json")});
  REQUIRE(r.code == 0);
  auto j = read_json(box.path("sim.json"));
  CHECK(j["total_queue_length"].get<double>() == doctest::Approx(0.5).epsilon(0.05));
  CHECK(j["eta"].get<double>() < 0.01);
  auto trace = slurp(box.path("sim.w.csv"));
  CHECK(trace.rfind("t,W\n", 0) == 0);

  REQUIRE(call({"simulate", "--graph", k4, "--rate", "0", "--warmup", "0", "--measure", "200", "--out",
                box.path("zero.json"), "--trace-out", box.path("zero_trace.csv")}).code == 0);
  auto z = read_json(box.path("zero.json"));
  CHECK(z["eta"].get<double>() == 0.0);
  CHECK(z["delivered_count"] == 0);
  CHECK(fs::exists(box.path("zero_trace.csv")));

  CHECK(call({"simulate", "--graph", k4, "--rate", "1", "--measure", "10", "--out", box.path("x.json")}).code == 2);
}

TEST_CASE("sweep") {
  Sandbox box;
  auto star = box.write("star.txt", "0 1\n0 2\n0 3\n0 4\n");
  REQUIRE(call({"sweep", "--graph", star, "--relative-rates", "0.5", "--warmup", "500", "--measure", "2000",
                "--out", box.path("one.csv")}).code == 0);
  std::istringstream one(slurp(box.path("one.csv")));
  std::vector<std::string> lines;
  for (std::string l; std::getline(one, l);) lines.push_back(l);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "kind,rate,relative_rate,seed,eta,L,T,eta_se,L_se,T_se");
  CHECK(lines[1].rfind("seed,0.625,0.5,", 0) == 0);
  CHECK(lines[2].rfind("mean,0.625,0.5,,", 0) == 0);

  REQUIRE(call({"sweep", "--graph", star, "--relative-rates", "0.4,1.4", "--seeds", "10", "--workers", "2",
                "--warmup", "500", "--measure", "3000", "--out", box.path("grid.csv")}).code == 0);
  std::istringstream grid(slurp(box.path("grid.csv")));
  std::vector<std::vector<std::string>> mean_rows;
  for (std::string l; std::getline(grid, l);) {
    if (l.rfind("mean,", 0) != 0) continue;
    std::vector<std::string> cells;
    std::stringstream ls(l);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    mean_rows.push_back(cells);
  }
  REQUIRE(mean_rows.size() == 2);
  CHECK(std::stod(mean_rows[0][4]) < 0.02);
  CHECK(std::stod(mean_rows[1][4]) > 0.05);
  CHECK(std::stod(mean_rows[1][7]) > 0.0);  // standard error present

  CHECK(call({"sweep", "--graph", star, "--out", box.path("x.csv")}).code == 2);
}

TEST_CASE("estimate-rc and replay") {
  Sandbox box;
  auto k4 = box.write("k4.txt", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
  auto r = call({"estimate-rc", "--graph", k4, "--bracket", "1", "8", "--resolution", "0.1", "--avoid", "0",
                 "--warmup", "2000", "--measure", "8000", "--out", box.path("rc.json")});
  REQUIRE(r.code == 0);
  auto j = read_json(box.path("rc.json"));
  CHECK(j["rc"].get<double>() == doctest::Approx(4.0).epsilon(0.1));
  CHECK(j["analytic_rc"].get<double>() == doctest::Approx(4.0));

  auto bad = call({"estimate-rc", "--graph", k4, "--bracket", "5", "8", "--avoid", "0", "--warmup", "1000",
                   "--measure", "4000", "--out", box.path("bad.json")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("eta") != std::string::npos);

  const std::string first = slurp(box.path("rc.json"));
  fs::remove(box.path("rc.json"));
  CHECK(call({"replay", box.path("rc.manifest.json")}).code == 0);
  CHECK(slurp(box.path("rc.json")) == first);

  CHECK(call({"replay", box.write("broken.json", "{not json")}).code == 2);
}

TEST_CASE("help and version") {
  CHECK(call({"--help"}).code == 0);
  auto v = call({"--version"});
  CHECK(v.code == 0);
  CHECK_FALSE(v.out.empty());
  CHECK(call({}).code == 2);
}
