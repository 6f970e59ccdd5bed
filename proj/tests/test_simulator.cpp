#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "netcap/analysis.hpp"
#include "netcap/errors.hpp"
#include "netcap/simulator.hpp"

using namespace netcap;

namespace {

SimConfig quiet(std::size_t avoid = 0) {
  SimConfig c;
  c.rate = 0.0;
  c.avoid = avoid;
  c.warmup_steps = 0;
  c.measure_steps = 100;
  return c;
}

std::size_t queued(const Simulator& s, std::size_t n) {
  std::size_t total = 0;
  for (Vertex v = 0; v < static_cast<Vertex>(n); ++v) total += s.queue(v).size();
  return total;
}

}  // namespace

TEST_CASE("hand traces") {
  SUBCASE("neighbor of the destination delivers on service") {
    Graph g = complete_graph(4);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    Simulator s(g, r, quiet());
    s.inject(0, 1);
    CHECK(s.in_flight() == 1);
    auto c = s.step();
    CHECK(c.delivered == 1);
    CHECK(c.in_flight == 0);
  }
  SUBCASE("path(3) takes two services") {
    Graph g = path_graph(3);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    Simulator s(g, r, quiet());
    s.inject(0, 2);
    auto c1 = s.step();
    CHECK(c1.delivered == 0);
    CHECK(s.queue(1).size() == 1);
    CHECK(s.queue(1).front().destination == 2);
    auto c2 = s.step();
    CHECK(c2.delivered == 1);
    CHECK(s.in_flight() == 0);
  }
  SUBCASE("one-avoiding walk on a path is forced forward") {
    Graph g = path_graph(4);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    for (std::uint64_t seed = 1; seed < 20; ++seed) {
      SimConfig c = quiet(1);
      c.seed = seed;
      Simulator s(g, r, c);
      s.inject(0, 3);
      CHECK(s.step().delivered == 0);
      CHECK(s.queue(1).size() == 1);
      CHECK(s.step().delivered == 0);
      CHECK(s.queue(2).size() == 1);
      CHECK(s.queue(2).front().recent[0] == 1);
      CHECK(s.step().delivered == 1);
    }
  }
  SUBCASE("dead end falls back to the full row") {
    // leaves 1 and 2 hang off the hub; 4 is reachable only through 3
    Graph g = parse_edge_list("0 1\n0 2\n0 3\n3 4");
    auto r = RoutingSpec::local(uniform_random_walk(g));
    int fallbacks = 0;
    for (std::uint64_t seed = 1; seed < 40; ++seed) {
      SimConfig c = quiet(1);
      c.seed = seed;
      Simulator s(g, r, c);
      s.inject(0, 4);
      s.step();
      for (Vertex leaf : {1, 2}) {
        if (s.queue(leaf).empty()) continue;
        s.step();
        CHECK(s.queue(0).size() == 1);  // the only way out is back
        ++fallbacks;
      }
      for (int k = 0; k < 200 && s.in_flight() > 0; ++k) s.step();
      CHECK(s.in_flight() == 0);
    }
    CHECK(fallbacks > 0);
  }
  SUBCASE("service capacity caps departures per step") {
    Graph g = star_graph(5);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    SimConfig c = quiet();
    c.capacity = 2;
    Simulator s(g, r, c);
    for (int k = 0; k < 5; ++k) s.inject(0, 1 + k % 4);
    CHECK(s.step().delivered == 2);
    CHECK(s.step().delivered == 2);
    CHECK(s.step().delivered == 1);
  }
  SUBCASE("packets reached after the step start wait") {
    // 0 -> 1 -> 2 -> 3 -> 4: a packet forwarded into 1 is not served again in the same step
    Graph g = path_graph(5);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    SimConfig c = quiet(1);
    Simulator s(g, r, c);
    s.inject(0, 4);
    s.inject(1, 4);
    s.step();
    REQUIRE(s.queue(1).size() == 1);
    CHECK(s.queue(1).front().source == 0);
    CHECK(s.queue(0).size() + s.queue(2).size() == 1);
  }
}

TEST_CASE("conservation and queue bookkeeping") {
  Graph g = generate_ba(40, 2, 5);
  auto r = RoutingSpec::local(uniform_random_walk(g));
  for (double rate : {0.3, 1.7, 6.0}) {
    SimConfig c;
    c.rate = rate;
    c.seed = 77;
    c.avoid = 1;
    Simulator s(g, r, c);
    std::size_t w = 0, generated = 0, delivered = 0;
    for (int t = 0; t < 3000; ++t) {
      auto k = s.step();
      CHECK(k.in_flight == w + k.generated - k.delivered);
      CHECK(k.in_flight == queued(s, g.size()));
      w = k.in_flight;
      generated += k.generated;
      delivered += k.delivered;
    }
    CHECK(generated == delivered + w);
    // Bernoulli on the fractional part keeps the mean
    CHECK(static_cast<double>(generated) / 3000.0 == doctest::Approx(rate).epsilon(0.05));
  }
}

TEST_CASE("generated packets never target their source") {
  Graph g = complete_graph(3);
  auto r = RoutingSpec::local(uniform_random_walk(g));
  SimConfig c;
  c.rate = 2.0;
  c.capacity = 5;
  Simulator s(g, r, c);
  for (int t = 0; t < 200; ++t) {
    s.step();
    for (Vertex v = 0; v < 3; ++v)
      for (const auto& p : s.queue(v)) {
        CHECK(p.source != p.destination);
        CHECK(p.recent_count <= c.avoid);
      }
  }
}

TEST_CASE("run results") {
  SUBCASE("zero rate") {
    Graph g = star_graph(5);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    SimConfig c = quiet();
    c.warmup_steps = 50;
    auto res = simulate(g, r, c);
    CHECK(res.eta == 0.0);
    CHECK(res.delivered_count == 0);
    CHECK(res.w_trace.size() == 150);
    CHECK(std::all_of(res.w_trace.begin(), res.w_trace.end(), [](auto w) { return w == 0; }));
  }
  SUBCASE("deterministic given seed") {
    Graph g = generate_ba(30, 2, 1);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    SimConfig c;
    c.rate = 1.0;
    c.warmup_steps = 500;
    c.measure_steps = 1000;
    c.seed = 4;
    auto a = simulate(g, r, c);
    auto b = simulate(g, r, c);
    CHECK(a.w_trace == b.w_trace);
    CHECK(a.mean_queue_lengths == b.mean_queue_lengths);
    CHECK(a.head_occupancy == b.head_occupancy);
    c.seed = 5;
    CHECK(simulate(g, r, c).w_trace != a.w_trace);
  }
  SUBCASE("K4 below capacity") {
    Graph g = complete_graph(4);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    SimConfig c;
    c.rate = 0.5;
    c.seed = 2;
    auto res = simulate(g, r, c);
    CHECK(res.eta < 0.01);
    CHECK(res.mean_in_flight == doctest::Approx(0.5).epsilon(0.05));
    CHECK(res.mean_delivery_time == doctest::Approx(1.0).epsilon(0.05));
    CHECK(res.generated_count == res.delivered_count + res.w_trace.back());
  }
  SUBCASE("star above capacity congests") {
    Graph g = star_graph(5);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    SimConfig c;
    c.rate = 2.0;
    c.warmup_steps = 1000;
    c.measure_steps = 5000;
    auto res = simulate(g, r, c);
    CHECK(res.eta > 0.05);
  }
  SUBCASE("Little's law at moderate load") {
    Graph g = generate_ba(60, 3, 9);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    const double rc = capacity_report(solve_alpha(g, r)).rc0;
    SimConfig c;
    c.rate = 0.5 * rc;
    c.warmup_steps = 2000;
    c.measure_steps = 20000;
    auto res = simulate(g, r, c);
    const double l = std::accumulate(res.mean_queue_lengths.begin(), res.mean_queue_lengths.end(), 0.0);
    CHECK(l / c.rate == doctest::Approx(res.mean_delivery_time).epsilon(0.1));
    CHECK(l == doctest::Approx(res.mean_in_flight).epsilon(1e-9));
  }
  SUBCASE("avoid depth at the minimum degree is flagged") {
    Graph g = star_graph(5);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    SimConfig c = quiet(1);
    CHECK(simulate(g, r, c).warnings.size() == 1);
    c.avoid = 0;
    CHECK(simulate(g, r, c).warnings.empty());
  }
  SUBCASE("config validation") {
    Graph g = path_graph(3);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    SimConfig c = quiet();
    c.measure_steps = 50;
    CHECK_THROWS_AS(Simulator(g, r, c), InvalidParams);
    c = quiet(kMaxAvoid + 1);
    CHECK_THROWS_AS(Simulator(g, r, c), InvalidParams);
    c = quiet();
    c.rate = -1.0;
    CHECK_THROWS_AS(Simulator(g, r, c), InvalidParams);
    c = quiet();
    c.capacity = 0;
    CHECK_THROWS_AS(Simulator(g, r, c), InvalidParams);
  }
}

TEST_CASE("order parameter") {
  std::vector<std::size_t> flat(50, 7);
  CHECK(order_parameter(flat, 0, 50, 1.0, 1.0) == 0.0);
  std::vector<std::size_t> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 0);
  CHECK(order_parameter(ramp, 0, 100, 1.0, 2.0) == doctest::Approx(0.5));
  CHECK(order_parameter(ramp, 20, 60, 3.0, 2.0) == doctest::Approx(1.5));
  std::vector<std::size_t> down(ramp.rbegin(), ramp.rend());
  CHECK(order_parameter(down, 0, 100, 1.0, 1.0) == 0.0);

  std::mt19937_64 rng(12);
  std::poisson_distribution<int> noise(20);
  std::vector<std::size_t> w(20000);
  for (auto& x : w) x = static_cast<std::size_t>(noise(rng));
  CHECK(order_parameter(w, 0, w.size(), 1.0, 1.0) < 1e-3);

  CHECK_THROWS_AS(order_parameter(ramp, 0, 9, 1.0, 1.0), DegenerateWindow);
  CHECK_THROWS_AS(order_parameter(ramp, 0, 100, 1.0, 0.0), InvalidParams);
}

TEST_CASE("critical rate bisection") {
  SimConfig base;
  base.warmup_steps = 2000;
  base.measure_steps = 8000;
  base.avoid = 0;
  {
    Graph g = complete_graph(4);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    auto est = estimate_rc(g, r, base, 1.0, 8.0, 0.1);
    CHECK(est.rc == doctest::Approx(4.0).epsilon(0.1));
    CHECK(est.high - est.low <= 0.1);
    CHECK_FALSE(est.probes.empty());
    CHECK_THROWS_AS(estimate_rc(g, r, base, 5.0, 8.0, 0.1), BadBracket);
  }
  {
    Graph g = star_graph(5);
    auto r = RoutingSpec::local(uniform_random_walk(g));
    auto est = estimate_rc(g, r, base, 0.5, 3.0, 0.05);
    CHECK(est.rc == doctest::Approx(1.25).epsilon(0.1));
  }
}
