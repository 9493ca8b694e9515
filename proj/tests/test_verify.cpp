#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <set>

#include "d2color/rng.hpp"
#include "d2color/verify.hpp"

using namespace d2;

namespace {

Graph random_graph(std::uint64_t seed, std::size_t max_n, double max_p) {
  StreamRng rng(seed);
  const std::size_t n = 1 + rng.below(max_n);
  const double p = rng.unit() * max_p;
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
  return Graph::from_edges(n, edges);
}

// Second implementation: for each node, walk one and two hops directly.
std::size_t double_bfs_conflicts(const Graph& g, const Coloring& col) {
  std::set<std::pair<NodeId, NodeId>> bad;
  for (NodeId v = 0; v < g.size(); ++v) {
    for (NodeId a : g.neighbors(v)) {
      if (col[a] == col[v]) bad.insert({std::min(a, v), std::max(a, v)});
      for (NodeId b : g.neighbors(a))
        if (b != v && col[b] == col[v]) bad.insert({std::min(b, v), std::max(b, v)});
    }
  }
  return bad.size();
}

// Second implementation of the flag definition with explicit loops over parts.
std::vector<char> brute_flags(const Graph& g, const Partition& part, const std::vector<Side>& sides, double lambda,
                              double threshold) {
  std::vector<char> out(g.size(), 0);
  for (NodeId v = 0; v < g.size(); ++v) {
    for (std::uint32_t i = 0; i < part.parts; ++i) {
      long red = 0, blue = 0;
      for (NodeId u : g.neighbors(v)) {
        if (part.part_of[u] != i) continue;
        if (sides[u] == Side::red) ++red;
        else ++blue;
      }
      const long deg = red + blue;
      if (deg == 0 || static_cast<double>(deg) < threshold) continue;
      if (2.0 * static_cast<double>(std::max(red, blue)) > (1.0 + lambda) * static_cast<double>(deg)) out[v] = 1;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("check_d2 on a path") {
  const Graph g = make_path(3);
  auto bad = check_d2(g, {0, 1, 0}, 5);
  CHECK_FALSE(bad.valid);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0] == Conflict{0, 2, 0});
  CHECK(check_d2(g, {0, 1, 2}, 5).valid);
  CHECK_FALSE(check_d2(g, {0, 1, 2}, 2).valid);
  auto partial = check_d2(g, {0, kLive, 2}, 5);
  CHECK_FALSE(partial.valid);
  CHECK(partial.violations.empty());
  CHECK(partial.live == std::vector<NodeId>{1});
}

TEST_CASE("rainbow colorings are valid") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = random_graph(seed, 80, 0.2);
    Coloring col(g.size());
    for (NodeId v = 0; v < g.size(); ++v) col[v] = static_cast<Color>(g.size() - 1 - v);
    const auto r = check_d2(g, col, g.size());
    CHECK(r.valid);
    CHECK(r.distinct_colors == g.size());
  }
}

TEST_CASE("check_d2 agrees with a double-BFS scan") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Graph g = random_graph(seed, 256, 0.03);
    StreamRng rng(seed + 1000);
    Coloring col(g.size());
    const std::uint64_t k = 1 + rng.below(40);
    for (auto& c : col) c = static_cast<Color>(rng.below(k));
    const auto r = check_d2(g, col, k);
    REQUIRE(r.violations.size() == double_bfs_conflicts(g, col));
    REQUIRE(r.valid == (r.violations.empty()));
  }
}

TEST_CASE("leeway and slack") {
  SUBCASE("nothing colored") {
    const Graph g = make_cycle(6);
    const auto sq = square(g);
    Coloring col(6, kLive);
    for (NodeId v = 0; v < 6; ++v) CHECK(leeway(g, sq, col, v) == 5);
  }
  SUBCASE("rainbow clique gadget") {
    const Graph g = make_moore(3);
    const auto sq = square(g);
    Coloring col(10);
    for (NodeId v = 0; v < 10; ++v) col[v] = v;
    for (NodeId v = 0; v < 10; ++v) CHECK(leeway(g, sq, col, v) == 1);
    CHECK(remaining_palette(g, sq, col, 4) == std::vector<Color>{4});
  }
  SUBCASE("slack recount on random partial colorings") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Graph g = random_graph(seed, 60, 0.1);
      const auto sq = square(g);
      StreamRng rng(seed * 7 + 1);
      const Color palette = static_cast<Color>(g.max_degree() * g.max_degree()) + 1;
      Coloring col(g.size());
      for (auto& c : col) c = rng.bernoulli(0.4) ? kLive : static_cast<Color>(rng.below(palette));
      for (NodeId v = 0; v < g.size(); ++v) {
        std::set<Color> used;
        std::int64_t live = 0;
        for (NodeId u = 0; u < g.size(); ++u) {
          if (u == v || !sq.adjacent(u, v)) continue;
          if (col[u] < 0) ++live;
          else used.insert(col[u]);
        }
        const std::int64_t lw = palette - static_cast<std::int64_t>(used.size());
        REQUIRE(leeway(g, sq, col, v) == lw);
        REQUIRE(slack(g, sq, col, v) == lw - live);
        REQUIRE(remaining_palette(g, sq, col, v).size() == static_cast<std::size_t>(lw));
      }
    }
  }
}

TEST_CASE("check_split") {
  SUBCASE("alternating sides on an even cycle") {
    // RRBB... gives every node one red and one blue neighbor
    const Graph g = make_cycle(12);
    std::vector<Side> sides(12);
    for (NodeId v = 0; v < 12; ++v) sides[v] = (v / 2) % 2 ? Side::blue : Side::red;
    CHECK(check_split(g, Partition::trivial(12), sides, 0.5, 0.0).flagged == 0);
    CHECK(check_split(g, Partition::trivial(12), sides, 0.5).flagged == 0);
    std::vector<Side> parity(12);
    for (NodeId v = 0; v < 12; ++v) parity[v] = v % 2 ? Side::blue : Side::red;
    CHECK(check_split(g, Partition::trivial(12), parity, 0.5, 0.0).flagged == 12);
  }
  SUBCASE("definition arithmetic") {
    // v = 0 with 100 neighbors, 80 red: 80 > 75
    std::vector<Edge> edges;
    for (NodeId u = 1; u <= 100; ++u) edges.emplace_back(0, u);
    const Graph g = Graph::from_edges(101, edges);
    std::vector<Side> sides(101, Side::blue);
    for (NodeId u = 1; u <= 80; ++u) sides[u] = Side::red;
    const auto flags = compute_flags(g, Partition::trivial(101), sides, 0.5, 100.0);
    CHECK(flags[0] == 1);
    CHECK(compute_flags(g, Partition::trivial(101), sides, 0.5, 101.0)[0] == 0);
  }
  SUBCASE("all red on a high degree graph") {
    const Graph g = make_random_regular(200, 64, 3);
    const std::vector<Side> red(200, Side::red);
    const auto s = check_split(g, Partition::trivial(200), red, 0.5, 1.0);
    CHECK(s.flagged == 200);
    CHECK(s.worst_imbalance == doctest::Approx(1.0));
  }
  SUBCASE("agreement with a brute-force flag computation") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Graph g = random_graph(seed, 200, 0.2);
      StreamRng rng(seed + 77);
      Partition part;
      part.parts = 1 + static_cast<std::uint32_t>(rng.below(4));
      part.part_of.resize(g.size());
      for (auto& p : part.part_of) p = static_cast<std::uint32_t>(rng.below(part.parts));
      std::vector<Side> sides(g.size());
      for (auto& s : sides) s = rng.bernoulli(0.5) ? Side::red : Side::blue;
      const double lambda = 0.1 + rng.unit();
      const double threshold = rng.unit() * 10.0;
      REQUIRE(compute_flags(g, part, sides, lambda, threshold) == brute_flags(g, part, sides, lambda, threshold));
    }
  }
}

TEST_CASE("report export") {
  const auto r = check_d2(make_path(3), {0, 1, 0}, 3);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["valid"] == false);
  CHECK(j["violations"].size() == 1);
  CHECK(VerifyReport::csv_header().find("distinct_colors") != std::string::npos);
  CHECK(r.csv_row() == "0,1,1,1,0,2,1,3");
}
