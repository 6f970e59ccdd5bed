#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "netcap/errors.hpp"
#include "netcap/graph.hpp"
#include "netcap/routing.hpp"

using namespace netcap;

namespace {

void check_rows(const TransitionMatrix& p, std::initializer_list<std::initializer_list<double>> rows) {
  Vertex i = 0;
  for (const auto& row : rows) {
    Vertex j = 0;
    for (double v : row) {
      CHECK(p.at(i, j) == doctest::Approx(v).epsilon(1e-15));
      ++j;
    }
    ++i;
  }
}

}  // namespace

TEST_CASE("random walk rows") {
  check_rows(uniform_random_walk(path_graph(3)), {{0, 1, 0}, {0.5, 0, 0.5}, {0, 1, 0}});
  auto k4 = uniform_random_walk(complete_graph(4));
  for (Vertex i = 0; i < 4; ++i)
    for (Vertex j = 0; j < 4; ++j) CHECK(k4.at(i, j) == doctest::Approx(i == j ? 0.0 : 1.0 / 3.0));
  check_rows(uniform_random_walk(star_graph(5)),
             {{0, .25, .25, .25, .25}, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}});
}

TEST_CASE("degree-biased rows") {
  Graph g = generate_ba(60, 2, 4);
  auto walk = uniform_random_walk(g);
  auto zero = degree_biased(g, 0.0);
  for (Vertex i = 0; i < 60; ++i)
    for (Vertex j = 0; j < 60; ++j) CHECK(std::abs(walk.at(i, j) - zero.at(i, j)) <= 1e-15);

  check_rows(degree_biased(path_graph(3), 1.0), {{0, 1, 0}});
  check_rows(degree_biased(star_graph(5), -1.0), {{0, .25, .25, .25, .25}});

  // a vertex with neighbors of degree 1 and 3: weights 1 and 3^beta
  Graph h = parse_edge_list("0 1\n0 2\n2 3\n2 4");
  auto p = degree_biased(h, 2.0);
  CHECK(p.at(0, 1) == doctest::Approx(1.0 / 10.0));
  CHECK(p.at(0, 2) == doctest::Approx(9.0 / 10.0));
}

TEST_CASE("shortest path routing rows") {
  auto sp = shortest_path_routing(path_graph(3));
  CHECK(sp.kind() == RoutingKind::Global);
  check_rows(sp.for_destination(2), {{0, 1, 0}, {0, 0, 1}});

  auto c4 = shortest_path_routing(cycle_graph(4));
  check_rows(c4.for_destination(2), {{0, 0.5, 0, 0.5}});

  auto k4 = shortest_path_routing(complete_graph(4));
  for (Vertex x = 0; x < 4; ++x)
    for (Vertex i = 0; i < 4; ++i)
      if (i != x) CHECK(k4.for_destination(x).at(i, x) == 1.0);

  // 0 -> 3 in a 6-cycle with chord-free square: two routes of length 3 via 1 and 5
  auto c6 = shortest_path_routing(cycle_graph(6));
  CHECK(c6.for_destination(3).at(0, 1) == doctest::Approx(0.5));
  CHECK(c6.for_destination(3).at(0, 5) == doctest::Approx(0.5));

  // path counts, not next hops: 0 reaches 5 through 1 (two paths) or 2 (one path)
  Graph g = parse_edge_list("0 1\n0 2\n1 3\n1 4\n2 4\n3 5\n4 5");
  auto p = shortest_path_routing(g).for_destination(5);
  CHECK(p.at(0, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(p.at(0, 2) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("shortest path support only decreases distance") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Graph g = generate_ba(40, 1 + seed % 3, seed);
    auto sp = shortest_path_routing(g);
    for (Vertex x = 0; x < 40; ++x) {
      auto d = bfs_distances(g, x);
      const auto& p = sp.for_destination(x);
      for (Vertex i = 0; i < 40; ++i) {
        if (i == x) continue;
        for (const auto& e : p.row(i)) CHECK(d[e.col] == d[i] - 1);
      }
    }
  }
}

TEST_CASE("consistency validation") {
  Graph path = path_graph(3);
  CHECK(validate_consistency(uniform_random_walk(path), path).ok);

  TransitionMatrix off(3, {{{1, 0.5}, {2, 0.5}}, {{0, 0.5}, {2, 0.5}}, {{1, 1.0}}});
  auto rep = validate_consistency(off, path);
  CHECK_FALSE(rep.ok);
  CHECK_FALSE(rep.problems.empty());

  TransitionMatrix short_row(3, {{{1, 0.9}}, {{0, 0.5}, {2, 0.5}}, {{1, 1.0}}});
  CHECK_FALSE(validate_consistency(short_row, path).ok);

  TransitionMatrix loop(3, {{{0, 0.5}, {1, 0.5}}, {{0, 0.5}, {2, 0.5}}, {{1, 1.0}}});
  CHECK_FALSE(validate_consistency(loop, path).ok);

  TransitionMatrix negative(3, {{{1, 1.0}}, {{0, 1.5}, {2, -0.5}}, {{1, 1.0}}});
  CHECK_FALSE(validate_consistency(negative, path).ok);

  // global: destination 2 unreachable from 0 under P_2 (0 and 1 bounce)
  Graph p4 = path_graph(4);
  std::vector<TransitionMatrix> mats;
  for (Vertex x = 0; x < 4; ++x) mats.push_back(uniform_random_walk(p4));
  mats[3] = TransitionMatrix(4, {{{1, 1.0}}, {{0, 1.0}}, {{1, 0.5}, {3, 0.5}}, {{2, 1.0}}});
  CHECK_FALSE(validate_consistency(RoutingSpec::global(mats), p4).ok);

  // every constructor passes
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Graph g = generate_ba(30 + 10 * seed, 1 + seed % 4, seed);
    CHECK(validate_consistency(uniform_random_walk(g), g).ok);
    CHECK(validate_consistency(degree_biased(g, -1.0 + 0.2 * seed), g).ok);
    CHECK(validate_consistency(random_weighted(g, seed), g).ok);
    CHECK(validate_consistency(shortest_path_routing(g), g).ok);
  }
}

TEST_CASE("stationary distribution") {
  SUBCASE("walk is degree proportional") {
    auto pi = stationary_distribution(uniform_random_walk(path_graph(3)));
    CHECK(pi.pi[0] == doctest::Approx(0.25));
    CHECK(pi.pi[1] == doctest::Approx(0.5));
    CHECK(pi.pi_max == doctest::Approx(0.5));

    auto star = stationary_distribution(uniform_random_walk(star_graph(5)));
    CHECK(star.pi[0] == doctest::Approx(0.5));
    for (int i = 1; i < 5; ++i) CHECK(star.pi[i] == doctest::Approx(0.125));

    auto k4 = stationary_distribution(uniform_random_walk(complete_graph(4)));
    for (double v : k4.pi) CHECK(v == doctest::Approx(0.25));
  }
  SUBCASE("properties on random routings, both methods") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      Graph g = generate_ba(50 + 15 * seed, 1 + seed % 3, seed);
      auto p = random_weighted(g, seed + 100);
      for (auto method : {StationaryMethod::Power, StationaryMethod::Direct}) {
        StationaryOptions o;
        o.method = method;
        auto s = stationary_distribution(p, o);
        double sum = 0.0;
        for (double v : s.pi) {
          CHECK(v >= 0.0);
          sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        CHECK(s.residual <= 1e-10);
        // independent residual
        std::vector<double> y(g.size(), 0.0);
        for (Vertex i = 0; i < static_cast<Vertex>(g.size()); ++i)
          for (const auto& e : p.row(i)) y[e.col] += e.p * s.pi[i];
        double r = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) r += std::abs(y[i] - s.pi[i]);
        CHECK(r <= 1e-10);
      }
    }
  }
  SUBCASE("bipartite chain still converges") {
    auto s = stationary_distribution(uniform_random_walk(cycle_graph(8)));
    for (double v : s.pi) CHECK(v == doctest::Approx(0.125));
  }
}

TEST_CASE("matrix text formats") {
  Graph g = generate_ba(20, 2, 3);
  auto p = random_weighted(g, 9);
  for (int format = 0; format < 2; ++format) {
    std::stringstream s;
    if (format == 0) write_dense_csv(s, p); else write_triplets(s, p);
    auto q = read_transition_matrix(s, 20);
    for (Vertex i = 0; i < 20; ++i)
      for (Vertex j = 0; j < 20; ++j) CHECK(q.at(i, j) == doctest::Approx(p.at(i, j)).epsilon(1e-15));
  }
  std::stringstream bad("0,1\n1,0,0\n");
  CHECK_THROWS_AS(read_transition_matrix(bad, 2), ParseError);
}
