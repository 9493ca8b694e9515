#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "d2color/rng.hpp"
#include "d2color/splitting.hpp"
#include "d2color/verify.hpp"

using namespace d2;

namespace {

// trial division by every polynomial of degree 1..deg/2
bool irreducible_brute(std::uint64_t f) {
  const int d = 63 - std::countl_zero(f);
  for (std::uint64_t g = 2; g < (std::uint64_t{1} << (d / 2 + 1)); ++g) {
    std::uint64_t r = f;
    const int dg = 63 - std::countl_zero(g);
    while (r && 63 - std::countl_zero(r) >= dg) r ^= g << (63 - std::countl_zero(r) - dg);
    if (r == 0) return false;
  }
  return true;
}

BitVec seed_from(std::uint64_t bits, std::size_t len) {
  BitVec s(len);
  for (std::size_t i = 0; i < len; ++i) s.set(i, (bits >> i) & 1);
  return s;
}

// E[F | prefix, bit] by listing every seed of every block the coins use.
double alpha_brute(const KWiseFamily& fam, const std::vector<CoinView>& coins, double lambda, double threshold,
                   std::uint32_t block, std::uint64_t prefix, std::size_t prefix_len) {
  const std::size_t L = fam.seed_len();
  std::vector<std::uint32_t> others;
  for (const auto& c : coins)
    if (c.fixed < 0 && c.block != block && std::find(others.begin(), others.end(), c.block) == others.end())
      others.push_back(c.block);
  const std::size_t free_bits = L - prefix_len + L * others.size();
  REQUIRE(free_bits <= 22);
  std::map<std::uint32_t, std::size_t> deg;
  for (const auto& c : coins) ++deg[c.part];
  double bad = 0;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << free_bits); ++x) {
    const std::uint64_t cur = prefix | ((x & ((std::uint64_t{1} << (L - prefix_len)) - 1)) << prefix_len);
    std::map<std::uint32_t, BitVec> seeds{{block, seed_from(cur, L)}};
    for (std::size_t i = 0; i < others.size(); ++i)
      seeds[others[i]] = seed_from((x >> (L - prefix_len + i * L)) & ((std::uint64_t{1} << L) - 1), L);
    std::map<std::uint32_t, std::size_t> red;
    for (const auto& c : coins) {
      const int side = c.fixed >= 0 ? c.fixed : static_cast<int>(fam.eval(seeds[c.block], c.id));
      if (side == 0) ++red[c.part];
    }
    bool f = false;
    for (const auto& [part, d] : deg) {
      if (static_cast<double>(d) < threshold) continue;
      const double limit = (1 + lambda) * d / 2.0;
      if (red[part] > limit || d - red[part] > limit) f = true;
    }
    bad += f;
  }
  return bad / static_cast<double>(std::uint64_t{1} << free_bits);
}

double total_expectation(const Graph& g, const Partition& p, double lambda, const SplitConfig& cfg,
                         const ClusterDecomposition& dec) {
  const KWiseFamily fam(split_independence(g.size(), cfg), width_for(g.size()), 1);
  const double thr = flag_threshold(g.size(), lambda, cfg.threshold_const);
  double e = 0;
  for (NodeId v = 0; v < g.size(); ++v) {
    std::vector<CoinView> coins;
    for (NodeId w : g.neighbors(v)) coins.push_back({w, p.part_of[w], -1, dec.cluster_of[w]});
    e += LocalExpectation(fam, coins, lambda, thr, 0, 30).expectation();
  }
  return e;
}

// Every node sends its id to each H-neighbor once and records what arrives.
struct Echo {
  struct State {
    std::vector<NodeId> heard;
  };
  Vocabulary vocab{{"id"}};
  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      for (std::size_t p = 0; p < ctx.degree(); ++p) out.send(p, Message(0).id(ctx.self));
      return Status::running;
    }
    for (std::size_t p = 0; p < in.size(); ++p)
      for (const Message& m : in[p]) {
        CHECK(m[0] == ctx.neighbors[p]);
        s.heard.push_back(static_cast<NodeId>(m[0]));
      }
    return Status::halted;
  }
};

}  // namespace

TEST_CASE("Ben-Or agrees with trial division") {
  for (std::uint64_t f = 2; f < (1u << 11); ++f) CHECK(irreducible_gf2(f) == irreducible_brute(f));
  for (unsigned m = 1; m <= 32; ++m) CHECK(irreducible_brute(Gf2m::make(m).modulus) == true);
}

TEST_CASE("GF(2^m) is a field") {
  for (unsigned m = 1; m <= 8; ++m) {
    const Gf2m f = Gf2m::make(m);
    const std::uint64_t q = std::uint64_t{1} << m;
    for (std::uint64_t a = 1; a < q; ++a) {
      std::uint64_t p = 1;
      for (std::uint64_t i = 0; i + 1 < q; ++i) p = f.mul(p, a);
      CHECK(p == 1);
      CHECK(f.mul(a, 3 % q) == f.mul(3 % q, a));
    }
  }
}

TEST_CASE("k-wise family: zero seed, bad inputs, masks") {
  const KWiseFamily fam(4, 10, 1);
  CHECK(fam.seed_len() == 40);
  const BitVec zero(fam.seed_len());
  for (std::uint64_t x = 0; x < 1024; x += 37) CHECK(fam.eval(zero, x) == 0);
  CHECK_THROWS_AS(fam.eval(BitVec(39), 1), std::invalid_argument);
  CHECK_THROWS_AS(fam.eval(zero, 1024), std::invalid_argument);
  for (std::uint64_t key = 0; key < 20; ++key) {
    const BitVec s = fam.random_seed(key);
    for (std::uint64_t x = 0; x < 1024; x += 13) CHECK(fam.eval(s, x) == fam.coin_mask(x).dot(s));
  }
}

TEST_CASE("k-wise family: every k inputs are uniform (exhaustive)") {
  for (auto [k, a, c] : {std::tuple{2u, 3u, 1u}, {2u, 3u, 3u}, {3u, 3u, 3u}, {3u, 2u, 2u}}) {
    const KWiseFamily fam(k, a, c);
    const std::size_t L = fam.seed_len();
    const std::uint64_t X = std::uint64_t{1} << a;
    std::vector<std::uint64_t> xs(k);
    // all increasing k-tuples of inputs
    std::vector<std::vector<std::uint64_t>> tuples;
    std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t i, std::uint64_t from) {
      if (i == k) {
        tuples.push_back(xs);
        return;
      }
      for (std::uint64_t x = from; x < X; ++x) {
        xs[i] = x;
        rec(i + 1, x + 1);
      }
    };
    rec(0, 0);
    for (const auto& t : tuples) {
      std::map<std::uint64_t, std::size_t> hist;
      for (std::uint64_t s = 0; s < (std::uint64_t{1} << L); ++s) {
        const BitVec seed = seed_from(s, L);
        std::uint64_t key = 0;
        for (auto x : t) key = (key << c) | fam.eval(seed, x);
        ++hist[key];
      }
      REQUIRE(hist.size() == (std::size_t{1} << (c * k)));
      for (const auto& [key, cnt] : hist) CHECK(cnt == (std::size_t{1} << (L - c * k)));
    }
  }
}

TEST_CASE("k-wise coins look fair on a large family") {
  const KWiseFamily fam(split_independence(4096, {}), 12, 1);
  std::size_t ones = 0, total = 0;
  for (std::uint64_t key = 0; key < 50; ++key) {
    const BitVec s = fam.random_seed(key);
    for (std::uint64_t x = 0; x < 4096; ++x) ones += fam.eval(s, x);
    total += 4096;
  }
  CHECK(std::abs(static_cast<double>(ones) / total - 0.5) < 0.01);
}

TEST_CASE("BitVec helpers") {
  BitVec b(130);
  CHECK(b.none());
  CHECK(b.top() == -1);
  b.set(0, true);
  b.set(64, true);
  b.set(129, true);
  CHECK(b.count() == 3);
  CHECK(b.top() == 129);
  CHECK(b.count_range(1, 129) == 1);
  CHECK(b.count_range(0, 130) == 3);
  CHECK(b.count_range(64, 65) == 1);
  BitVec c(130);
  c.set(64, true);
  c.set(3, true);
  CHECK(b.dot(c) == true);
  c.set(0, true);
  CHECK(b.dot(c) == false);
}

TEST_CASE("reference decomposition: small cases and validator") {
  const Graph one = Graph::from_edges(1, {});
  const auto d1 = reference_decomposition(one);
  CHECK(d1.clusters() == 1);
  CHECK(validate_decomposition(one, d1, 2).valid);

  const Graph path = make_path(10);
  const auto dp = reference_decomposition(path);
  const auto cp = validate_decomposition(path, dp, 2);
  CHECK(cp.valid);
  std::set<std::uint32_t> seen(dp.cluster_of.begin(), dp.cluster_of.end());
  CHECK(seen.size() == dp.clusters());

  const Graph rr = make_random_regular(512, 4, 11);
  const auto dr = reference_decomposition(rr);
  const auto cr = validate_decomposition(rr, dr, 2);
  CHECK(cr.valid);
  // ball carving: each color class at least halves the rest
  CHECK(dr.colors <= ceil_log2(512) + 1);
  CHECK(dr.depth <= 2 * (ceil_log2(512) + 1));

  // merging two colors breaks the separation
  auto bad = dr;
  for (auto& c : bad.color_of_cluster) c = 0;
  bad.colors = 1;
  if (dr.colors > 1) CHECK_FALSE(validate_decomposition(rr, bad, 2).valid);
  auto broken = dr;
  broken.cluster_of[0] = static_cast<std::uint32_t>(broken.clusters());
  CHECK_FALSE(validate_decomposition(rr, broken, 2).valid);
}

TEST_CASE("randomized split at desk scale") {
  const Graph g = make_random_regular(1000, 32, 5);
  const auto dec = reference_decomposition(g);
  const auto p = Partition::trivial(g.size());
  SplitConfig cfg;
  cfg.threshold_const = 0.05;  // every node gated in
  int clean = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = randomized_split(g, p, 1.0, dec.cluster_of, s, cfg);
    CHECK(r.flags == compute_flags(g, p, r.side, 1.0, r.threshold));
    clean += r.flagged == 0;
  }
  CHECK(clean >= 99);
  // λ = 0.5: each node fails with probability ≈ 0.002
  std::size_t flags = 0;
  for (std::uint64_t s = 0; s < 100; ++s) flags += randomized_split(g, p, 0.5, dec.cluster_of, s, cfg).flagged;
  CHECK(flags > 0);
  CHECK(flags < 600);
}

TEST_CASE("conditional expectations match enumeration") {
  const KWiseFamily fam(2, 3, 1);  // 6 seed bits, ids < 8
  StreamRng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<CoinView> coins;
    const std::size_t nc = 3 + rng.below(6);
    const bool two_blocks = trial % 3 == 0;
    for (std::size_t i = 0; i < nc; ++i) {
      CoinView c;
      c.id = static_cast<NodeId>(rng.below(8));
      c.part = static_cast<std::uint32_t>(rng.below(2));
      c.block = two_blocks ? static_cast<std::uint32_t>(rng.below(2)) : 0;
      c.fixed = rng.below(5) == 0 ? static_cast<std::int8_t>(rng.below(2)) : std::int8_t{-1};
      coins.push_back(c);
    }
    const double lambda = 0.2 + 0.6 * rng.unit();
    const double thr = 2;
    for (unsigned limit : {12u, 2u}) {
      LocalExpectation le(fam, coins, lambda, thr, 0, limit);
      std::uint64_t prefix = 0;
      for (std::size_t len = 0; len < fam.seed_len(); ++len) {
        for (bool b : {false, true}) {
          AlphaStats st;
          const double a = le.alpha(b, &st);
          if (st.approx == 0) {
            const double want =
                alpha_brute(fam, coins, lambda, thr, 0, prefix | (std::uint64_t{b} << len), len + 1);
            CHECK(a == doctest::Approx(want).epsilon(1e-9));
          }
          const BitVec pv = seed_from(prefix, fam.seed_len());
          if (limit == 12 && le.relevant()) CHECK(conditional_alpha(fam, coins, lambda, thr, 0, pv, len, b) == doctest::Approx(a));
        }
        if (limit == 12) {
          const double e = le.expectation();
          CHECK(e == doctest::Approx(alpha_brute(fam, coins, lambda, thr, 0, prefix, len)).epsilon(1e-9));
          CHECK(std::min(le.alpha(false), le.alpha(true)) <= e + 1e-12);
          CHECK(0.5 * (le.alpha(false) + le.alpha(true)) == doctest::Approx(e));
        }
        const bool bit = rng.below(2);
        le.fix(bit);
        prefix |= std::uint64_t{bit} << len;
      }
    }
  }
}

TEST_CASE("all-fixed coins give a 0/1 expectation") {
  const KWiseFamily fam(2, 4, 1);
  std::vector<CoinView> coins;
  for (NodeId i = 0; i < 6; ++i) coins.push_back({i, 0, static_cast<std::int8_t>(i < 5 ? 0 : 1), 0});
  LocalExpectation le(fam, coins, 0.5, 2, 0, 12);
  CHECK(le.relevant());
  CHECK(le.constant_in_block());
  CHECK(le.alpha(false) == 1.0);
  CHECK(le.alpha(true) == 1.0);
  coins[0].fixed = 1;
  coins[1].fixed = 1;
  LocalExpectation ok(fam, coins, 0.5, 2, 0, 12);
  CHECK(ok.expectation() == 0.0);
  LocalExpectation below(fam, coins, 0.5, 7, 0, 12);
  CHECK_FALSE(below.relevant());
  CHECK(below.expectation() == 0.0);
}

TEST_CASE("derandomized split beats the all-zero seed on a star") {
  const Graph g = make_star(64);
  const auto dec = reference_decomposition(g);
  const auto p = Partition::trivial(g.size());
  SplitConfig cfg;
  cfg.threshold_const = 0.05;
  // zero seed: every coin red, the center is flagged
  std::vector<Side> red(g.size(), Side::red);
  const double thr = flag_threshold(g.size(), 0.5, cfg.threshold_const);
  CHECK(compute_flags(g, p, red, 0.5, thr)[0] == 1);
  const auto r = derand_split(g, p, 0.5, dec, SimConfig{}, cfg);
  CHECK(r.postcondition);
  CHECK(r.split.flagged == 0);
  CHECK(r.trace.violation_count == 0);
  CHECK(r.skipped_clusters == 0);
  // the center sees 63 coins of one block: past a few bits neither method fits 2^12 terms
  CHECK(r.alpha.exact > 0);
  const KWiseFamily fam(split_independence(g.size(), cfg), width_for(g.size()), 1);
  for (NodeId v = 0; v < g.size(); ++v)
    CHECK((fam.eval(r.seeds[dec.cluster_of[v]], v) == 0) == (r.split.side[v] == Side::red));
}

TEST_CASE("derandomized split reaches zero when the expectation is below one") {
  const Graph g = make_random_regular(256, 32, 8);
  const auto dec = reference_decomposition(g);
  const auto p = Partition::trivial(g.size());
  SplitConfig cfg;
  cfg.threshold_const = 0.05;
  cfg.k = 8;
  const double e = total_expectation(g, p, 0.5, cfg, dec);
  REQUIRE(e < 1.0);
  REQUIRE(e > 0.05);
  const auto a = derand_split(g, p, 0.5, dec, SimConfig{}, cfg);
  CHECK(a.split.flagged == 0);
  CHECK(a.postcondition);
  CHECK(a.trace.violation_count == 0);
  const auto b = derand_split(g, p, 0.5, dec, SimConfig{}, cfg);
  CHECK(a.split.side == b.split.side);
  CHECK(a.trace.rounds_used == b.trace.rounds_used);
}

TEST_CASE("derandomized split with two parts and literal constants") {
  const Graph g = make_random_regular(512, 16, 2);
  const auto dec = reference_decomposition(g);
  Partition p{std::vector<std::uint32_t>(g.size()), 2};
  for (NodeId v = 0; v < g.size(); ++v) p.part_of[v] = v % 2;
  const auto r = derand_split(g, p, 0.25, dec, SimConfig{});
  CHECK(r.postcondition);
  // nothing reaches the literal threshold, so no seed needs fixing
  CHECK(r.skipped_clusters == dec.clusters());
  CHECK(r.trace.violation_count == 0);
  auto bad = dec;
  for (auto& c : bad.color_of_cluster) c = 0;
  bad.colors = 1;
  if (dec.colors > 1) CHECK_THROWS_AS(derand_split(g, p, 0.25, bad, SimConfig{}), std::invalid_argument);
}

TEST_CASE("split levels and the multi-phase audit") {
  CHECK(split_levels(2048, 64, 1.0) == 0);
  CHECK(split_levels(1 << 20, 1 << 18, 1.0) == 0);
  MultiPhaseConfig tiny;
  tiny.h_const = 1e-3;
  CHECK(split_levels(256, 16, 1.0, tiny) > 0);
  CHECK(split_levels(256, 64, 1.0, tiny) >= split_levels(256, 16, 1.0, tiny));

  const Graph g = make_random_regular(2048, 64, 1);
  const auto r = multi_phase_split(g, 1.0, SimConfig{});
  CHECK(r.h == 0);
  CHECK(r.partition.parts == 1);
  CHECK(r.max_part_degree == 64);
  CHECK(r.audit);

  const Graph s = make_random_regular(128, 8, 3);
  const auto f = multi_phase_split(s, 1.0, SimConfig{}, tiny);
  CHECK(f.h > 0);
  CHECK(f.partition.parts == (1u << f.h));
  CHECK(f.max_part_degree == max_part_degree(s, f.partition));
  CHECK(f.audit == (static_cast<double>(f.max_part_degree) <= f.delta_h));
}

TEST_CASE("relay delivers exactly the H-neighborhoods") {
  for (std::uint64_t seed : {1u, 2u}) {
    const Graph g = make_gnp(200, 0.03, seed);
    Partition p{std::vector<std::uint32_t>(g.size()), 3};
    for (NodeId v = 0; v < g.size(); ++v) p.part_of[v] = v % 3;
    const RelayNet net(g, p);
    // oracle: same part, distance 1 or 2
    const SquareGraph sq = square(g);
    for (NodeId v = 0; v < g.size(); ++v) {
      std::vector<NodeId> want;
      for (NodeId w : sq.neighbors(v))
        if (p.part_of[w] == p.part_of[v]) want.push_back(w);
      const auto hn = net.h().neighbors(v);
      CHECK(std::vector<NodeId>(hn.begin(), hn.end()) == want);
      for (std::size_t i = 0; i < hn.size(); ++i) {
        const NodeId m = net.via(v, i);
        CHECK((m == hn[i] || (g.adjacent(v, m) && g.adjacent(m, hn[i]))));
      }
    }
    std::vector<Echo::State> st(g.size());
    const auto t = net.run(Echo{}, st, SimConfig{});
    CHECK(t.violation_count == 0);
    for (NodeId v = 0; v < g.size(); ++v) {
      auto heard = st[v].heard;
      std::sort(heard.begin(), heard.end());
      const auto hn = net.h().neighbors(v);
      CHECK(heard == std::vector<NodeId>(hn.begin(), hn.end()));
    }
  }
}

TEST_CASE("relay super-round length") {
  const Graph k = make_gnp(30, 1.0, 1);
  const RelayNet direct(k, Partition::trivial(k.size()));
  CHECK(direct.direct_only());
  CHECK(direct.super_round() == 2);

  // a path split so that every node has at most one neighbor per part
  const Graph path = make_path(40);
  Partition p{std::vector<std::uint32_t>(40), 2};
  for (NodeId v = 0; v < 40; ++v) p.part_of[v] = (v / 2) % 2;
  const RelayNet net(path, p);
  CHECK(net.delta_prime() == 1);
  CHECK(net.super_round() <= 3);
  std::vector<Echo::State> st(40);
  CHECK_NOTHROW(net.run(Echo{}, st, SimConfig{}));

  // too short a super-round is detected
  const Graph star = make_star(20);
  RelayNet tight(star, Partition::trivial(20));
  tight.set_super_round(2);
  std::vector<Echo::State> st2(20);
  CHECK_THROWS_AS(tight.run(Echo{}, st2, SimConfig{}), RelayOverrun);
}

TEST_CASE("(1+ε)Δ coloring of G") {
  const Graph k2 = make_path(2);
  const auto a = color_g_splitting(k2, 1.0, SimConfig{});
  CHECK(check_proper(k2, a.coloring, a.colors_bound).valid);
  const Graph g = make_random_regular(1024, 64, 4);
  const auto r = color_g_splitting(g, 0.5, SimConfig{});
  const auto rep = check_proper(g, r.coloring, r.colors_bound);
  CHECK(rep.valid);
  CHECK(static_cast<double>(r.colors_bound) <= r.bound);
  CHECK(r.trace.violation_count == 0);
}

TEST_CASE("(1+ε)Δ² coloring of G²") {
  const Graph g = make_random_regular(4096, 16, 3);
  const auto r = color_g2_splitting(g, 1.0, SimConfig{});
  const auto rep = check_d2(g, r.coloring, r.colors_bound);
  CHECK(rep.valid);
  CHECK(static_cast<double>(r.colors_bound) <= r.bound);
  CHECK(r.colors_bound <= 2 * 16 * 16);
  CHECK(r.trace.violation_count == 0);
  const auto again = color_g2_splitting(g, 1.0, SimConfig{});
  CHECK(again.coloring == r.coloring);
}

TEST_CASE("csv export") {
  Partition p{{0, 1, 1}, 2};
  std::ostringstream os;
  write_partition_csv(os, p);
  CHECK(os.str() == "node,part\n0,0\n1,1\n2,1\n");
  const auto d = reference_decomposition(make_path(3));
  std::ostringstream ds;
  write_decomposition_csv(ds, d);
  const std::string text = ds.str();
  CHECK(text.rfind("node,cluster,color\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
