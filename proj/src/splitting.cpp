#include "d2color/splitting.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "d2color/protocol.hpp"
#include "d2color/rng.hpp"
#include "d2color/verify.hpp"

namespace d2 {

// ---------------------------------------------------------------- BitVec

bool BitVec::dot(const BitVec& o) const {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < w_.size(); ++i) acc ^= w_[i] & o.w_[i];
  return std::popcount(acc) & 1;
}

std::ptrdiff_t BitVec::top() const {
  for (std::size_t i = w_.size(); i-- > 0;)
    if (w_[i]) return static_cast<std::ptrdiff_t>(i * 64 + 63 - std::countl_zero(w_[i]));
  return -1;
}

bool BitVec::none() const {
  return std::all_of(w_.begin(), w_.end(), [](std::uint64_t x) { return x == 0; });
}

std::size_t BitVec::count() const {
  std::size_t c = 0;
  for (auto x : w_) c += std::popcount(x);
  return c;
}

std::size_t BitVec::count_range(std::size_t lo, std::size_t hi) const {
  if (lo >= hi) return 0;
  std::size_t c = 0;
  const std::size_t wl = lo >> 6, wh = (hi - 1) >> 6;
  for (std::size_t i = wl; i <= wh; ++i) {
    std::uint64_t x = w_[i];
    if (i == wl) x &= ~std::uint64_t{0} << (lo & 63);
    if (i == wh && (hi & 63)) x &= (std::uint64_t{1} << (hi & 63)) - 1;
    c += std::popcount(x);
  }
  return c;
}

// ---------------------------------------------------------------- GF(2^m)

namespace {

unsigned degree_of(std::uint64_t p) { return p ? 63 - std::countl_zero(p) : 0; }

std::uint64_t poly_mod(std::uint64_t a, std::uint64_t f) {
  const unsigned df = degree_of(f);
  while (a && degree_of(a) >= df) a ^= f << (degree_of(a) - df);
  return a;
}

// a, b of degree < deg f ≤ 32
std::uint64_t poly_mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t f) {
  std::uint64_t r = 0;
  while (b) {
    if (b & 1) r ^= a;
    b >>= 1;
    a <<= 1;
  }
  return poly_mod(r, f);
}

std::uint64_t poly_gcd(std::uint64_t a, std::uint64_t b) {
  while (b) {
    a = poly_mod(a, b);
    std::swap(a, b);
  }
  return a;
}

}  // namespace

bool irreducible_gf2(std::uint64_t f) {
  const unsigned m = degree_of(f);
  if (f < 2 || m > 32) throw std::invalid_argument("irreducible_gf2: degree must be in [1, 32]");
  std::uint64_t h = 0b10;  // x
  for (unsigned i = 1; i <= m / 2; ++i) {
    h = poly_mulmod(h, h, f);
    if (poly_gcd(f, h ^ 0b10) != 1) return false;
  }
  return true;
}

Gf2m Gf2m::make(unsigned m) {
  if (m == 0 || m > 32) throw std::invalid_argument("GF(2^m) needs 1 ≤ m ≤ 32");
  for (std::uint64_t low = 1; low < (std::uint64_t{1} << m); low += 2) {
    const std::uint64_t f = (std::uint64_t{1} << m) | low;
    if (irreducible_gf2(f)) return {m, f};
  }
  throw std::logic_error("no irreducible polynomial found");
}

std::uint64_t Gf2m::mul(std::uint64_t a, std::uint64_t b) const {
  std::uint64_t r = 0;
  const std::uint64_t top = std::uint64_t{1} << m;
  while (b) {
    if (b & 1) r ^= a;
    b >>= 1;
    a <<= 1;
    if (a & top) a ^= modulus;
  }
  return r;
}

// ---------------------------------------------------------------- family

KWiseFamily::KWiseFamily(std::size_t k, unsigned a, unsigned c)
    : k_(k), a_(a), c_(c), field_(Gf2m::make(std::max({a, c, 1u}))) {
  if (k == 0) throw std::invalid_argument("k-wise family needs k ≥ 1");
  if (c == 0 || c > field_.m) throw std::invalid_argument("output width must be in [1, m]");
  for (unsigned b = 0; b < field_.m; ++b) {
    std::uint64_t row = 0;
    for (unsigned i = 0; i < field_.m; ++i)
      row |= (field_.mul(std::uint64_t{1} << b, std::uint64_t{1} << i) & 1) << i;
    low_bit_.push_back(row);
  }
}

std::uint64_t KWiseFamily::eval(const BitVec& seed, std::uint64_t x) const {
  if (seed.size() != seed_len()) throw std::invalid_argument("seed length differs from k·max(a, c)");
  if (a_ < 64 && x >= (std::uint64_t{1} << a_)) throw std::invalid_argument("input does not fit a bits");
  const unsigned m = field_.m;
  std::uint64_t r = 0;
  for (std::size_t j = k_; j-- > 0;) {
    std::uint64_t coef = 0;
    for (unsigned b = 0; b < m; ++b) coef |= static_cast<std::uint64_t>(seed.get(j * m + b)) << b;
    r = field_.mul(r, x) ^ coef;
  }
  return r & ((std::uint64_t{1} << c_) - 1);
}

BitVec KWiseFamily::coin_mask(std::uint64_t x) const {
  if (c_ != 1) throw std::logic_error("coin masks need c = 1");
  const unsigned m = field_.m;
  BitVec w(seed_len());
  std::uint64_t pw = 1;
  for (std::size_t j = 0; j < k_; ++j) {
    for (unsigned b = 0; b < m; ++b)
      if (std::popcount(low_bit_[b] & pw) & 1) w.set(j * m + b, true);
    pw = field_.mul(pw, x);
  }
  return w;
}

BitVec KWiseFamily::random_seed(std::uint64_t key) const {
  StreamRng rng(key);
  BitVec s(seed_len());
  for (std::size_t i = 0; i < s.size(); ++i) s.set(i, rng.below(2) == 1);
  return s;
}

// ---------------------------------------------------------------- decomposition

namespace {

// Stamped BFS scratch.
struct Bfs {
  std::vector<std::uint32_t> dist;
  std::vector<std::uint32_t> stamp;
  std::vector<NodeId> parent;
  std::uint32_t now = 0;
  std::vector<NodeId> order;

  explicit Bfs(std::size_t n) : dist(n), stamp(n, 0), parent(n) {}

  bool seen(NodeId v) const { return stamp[v] == now; }

  // multi-source, stops after depth `limit`
  void run(const Graph& g, std::span<const NodeId> sources, std::size_t limit) {
    ++now;
    order.clear();
    for (NodeId s : sources) {
      if (seen(s)) continue;
      stamp[s] = now;
      dist[s] = 0;
      parent[s] = s;
      order.push_back(s);
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
      const NodeId u = order[i];
      if (dist[u] >= limit) continue;
      for (NodeId w : g.neighbors(u)) {
        if (seen(w)) continue;
        stamp[w] = now;
        dist[w] = dist[u] + 1;
        parent[w] = u;
        order.push_back(w);
      }
    }
  }
};

std::uint64_t edge_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

ClusterDecomposition reference_decomposition(const Graph& g, std::size_t k_dist) {
  if (k_dist == 0) throw std::invalid_argument("k_dist must be positive");
  const std::size_t n = g.size();
  ClusterDecomposition d;
  d.k_dist = k_dist;
  d.cluster_of.assign(n, 0);
  std::vector<char> covered(n, 0), active(n, 0), in_ball(n, 0);
  std::size_t left = n;
  Bfs bfs(n);
  std::uint32_t color = 0;
  while (left > 0) {
    for (NodeId v = 0; v < n; ++v) active[v] = covered[v] ? 0 : 1;
    for (NodeId v = 0; v < n; ++v) {
      if (!active[v]) continue;
      std::vector<NodeId> ball{v}, layer{v}, next;
      in_ball[v] = 1;
      for (;;) {
        bfs.run(g, layer, k_dist);
        next.clear();
        for (NodeId w : bfs.order)
          if (active[w] && !in_ball[w]) next.push_back(w);
        if (next.size() <= ball.size()) break;
        for (NodeId w : next) in_ball[w] = 1;
        ball.insert(ball.end(), next.begin(), next.end());
        layer = next;
      }
      const auto id = static_cast<std::uint32_t>(d.color_of_cluster.size());
      for (NodeId w : ball) {
        in_ball[w] = 0;
        covered[w] = 1;
        active[w] = 0;
        d.cluster_of[w] = id;
      }
      for (NodeId w : next) active[w] = 0;
      left -= ball.size();
      d.color_of_cluster.push_back(color);
      d.center.push_back(v);

      // union of BFS paths from the center
      std::sort(ball.begin(), ball.end());
      bfs.run(g, std::span<const NodeId>(&v, 1), n);
      std::vector<std::pair<NodeId, NodeId>> tree;
      std::unordered_map<NodeId, char> in_tree;
      for (NodeId w : ball) {
        NodeId x = w;
        while (!in_tree.contains(x)) {
          in_tree[x] = 1;
          tree.emplace_back(x, bfs.parent[x]);
          d.depth = std::max<std::size_t>(d.depth, bfs.dist[x]);
          if (x == v) break;
          x = bfs.parent[x];
        }
      }
      std::sort(tree.begin(), tree.end());
      d.tree.push_back(std::move(tree));
    }
    ++color;
  }
  d.colors = color;
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> load(color);
  for (std::size_t c = 0; c < d.clusters(); ++c)
    for (const auto& [x, p] : d.tree[c])
      if (x != p) d.congestion = std::max<std::size_t>(d.congestion, ++load[d.color_of_cluster[c]][edge_key(x, p)]);
  if (d.congestion == 0 && n > 0) d.congestion = 1;
  return d;
}

DecompositionCheck validate_decomposition(const Graph& g, const ClusterDecomposition& d, std::size_t k_dist,
                                          std::optional<std::size_t> max_congestion) {
  DecompositionCheck r;
  auto fail = [&](std::string s) { r.problems.push_back(std::move(s)); };
  const std::size_t n = g.size();
  const std::size_t cl = d.clusters();
  if (d.cluster_of.size() != n) fail("cluster_of does not cover every node");
  if (d.tree.size() != cl || d.center.size() != cl) fail("tree or center count differs from cluster count");
  if (!r.problems.empty()) return r;
  for (NodeId v = 0; v < n; ++v)
    if (d.cluster_of[v] >= cl) fail("node " + std::to_string(v) + " has no cluster");
  for (std::size_t c = 0; c < cl; ++c)
    if (d.color_of_cluster[c] >= d.colors) fail("cluster " + std::to_string(c) + " has an out-of-range color");
  if (!r.problems.empty()) return r;

  std::vector<std::vector<NodeId>> members(cl);
  for (NodeId v = 0; v < n; ++v) members[d.cluster_of[v]].push_back(v);
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> load(d.colors);
  std::size_t kappa = 0;
  for (std::size_t c = 0; c < cl; ++c) {
    std::unordered_map<NodeId, NodeId> parent;
    for (const auto& [x, p] : d.tree[c]) parent[x] = p;
    const NodeId root = d.center[c];
    if (!parent.contains(root) || parent[root] != root) {
      fail("cluster " + std::to_string(c) + ": center is not the tree root");
      continue;
    }
    for (const auto& [x, p] : d.tree[c]) {
      if (x == p) continue;
      if (!g.adjacent(x, p)) fail("cluster " + std::to_string(c) + ": tree edge not in G");
      kappa = std::max<std::size_t>(kappa, ++load[d.color_of_cluster[c]][edge_key(x, p)]);
    }
    for (const auto& [x, p] : d.tree[c]) {
      NodeId y = x;
      std::size_t steps = 0;
      while (y != root && steps <= parent.size()) {
        auto it = parent.find(y);
        if (it == parent.end()) break;
        y = it->second;
        ++steps;
      }
      if (y != root) fail("cluster " + std::to_string(c) + ": tree is not connected to the root");
      else if (steps > d.depth) fail("cluster " + std::to_string(c) + ": tree deeper than reported");
    }
    for (NodeId v : members[c])
      if (!parent.contains(v)) fail("cluster " + std::to_string(c) + ": node " + std::to_string(v) + " missing from tree");
  }
  if (kappa > d.congestion) fail("congestion above the reported κ");
  if (max_congestion && kappa > *max_congestion) fail("congestion above the allowed bound");

  Bfs bfs(n);
  for (NodeId v = 0; v < n; ++v) {
    bfs.run(g, std::span<const NodeId>(&v, 1), k_dist);
    const auto cv = d.cluster_of[v];
    for (NodeId w : bfs.order) {
      const auto cw = d.cluster_of[w];
      if (cw != cv && d.color_of_cluster[cw] == d.color_of_cluster[cv]) {
        fail("same-colored clusters " + std::to_string(cv) + " and " + std::to_string(cw) + " within distance " +
             std::to_string(k_dist));
        break;
      }
    }
    if (r.problems.size() > 32) break;
  }
  r.valid = r.problems.empty();
  return r;
}

// ---------------------------------------------------------------- randomized

std::size_t split_independence(std::size_t n, const SplitConfig& cfg) {
  if (cfg.k) return *cfg.k;
  return 10 * std::max<std::size_t>(1, ceil_log2(std::max<std::size_t>(n, 2)));
}

namespace {

KWiseFamily family_for(std::size_t n, const SplitConfig& cfg) {
  return KWiseFamily(split_independence(n, cfg), width_for(std::max<std::size_t>(n, 2)), 1);
}

void finish_split(const Graph& g, const Partition& partition, double lambda, double threshold_const, SplitResult& r) {
  r.threshold = flag_threshold(g.size(), lambda, threshold_const);
  r.flags = compute_flags(g, partition, r.side, lambda, r.threshold);
  r.flagged = static_cast<std::size_t>(std::count(r.flags.begin(), r.flags.end(), 1));
}

}  // namespace

SplitResult randomized_split(const Graph& g, const Partition& partition, double lambda,
                             const std::vector<std::uint32_t>& cluster_of, std::uint64_t seed, const SplitConfig& cfg) {
  const std::size_t n = g.size();
  if (cluster_of.size() != n) throw std::invalid_argument("cluster_of size differs from node count");
  const KWiseFamily fam = family_for(n, cfg);
  std::unordered_map<std::uint32_t, BitVec> seeds;
  SplitResult r;
  r.side.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    auto it = seeds.find(cluster_of[v]);
    if (it == seeds.end()) it = seeds.emplace(cluster_of[v], fam.random_seed(mix_keys(seed, cluster_of[v]))).first;
    r.side[v] = fam.eval(it->second, v) == 0 ? Side::red : Side::blue;
  }
  finish_split(g, partition, lambda, cfg.threshold_const, r);
  return r;
}

// ---------------------------------------------------------------- local expectation

LocalExpectation::LocalExpectation(const KWiseFamily& family, std::span<const CoinView> coins, double lambda,
                                   double threshold, std::uint32_t current_block, unsigned limit,
                                   const std::vector<BitVec>* masks)
    : family_(&family), lambda_(lambda), limit_(limit), block_(current_block) {
  std::unordered_map<std::uint32_t, std::size_t> degree;
  for (const auto& c : coins) ++degree[c.part];
  std::vector<std::uint32_t> relevant_parts;
  for (const auto& [part, deg] : degree) {
    const auto d = static_cast<double>(deg);
    // a part whose limit reaches its degree can never be flagged
    if (d >= threshold && (1.0 + lambda) * d / 2.0 < d) relevant_parts.push_back(part);
  }
  relevant_ = !relevant_parts.empty();
  if (!relevant_) return;
  std::sort(relevant_parts.begin(), relevant_parts.end());

  const std::size_t L = family.seed_len();
  prefix_ = BitVec(L);
  pivot_at_.assign(L, -1);
  std::vector<std::pair<NodeId, std::uint32_t>> rows;  // (id, block)
  for (std::uint32_t part : relevant_parts) {
    Part p;
    p.degree = degree[part];
    p.lo = rows.size();
    for (const auto& c : coins) {
      if (c.part != part) continue;
      if (c.fixed >= 0)
        p.fixed_red += c.fixed == static_cast<std::int8_t>(Side::red) ? 1 : 0;
      else
        rows.emplace_back(c.id, c.block);
    }
    p.hi = rows.size();
    parts_.push_back(p);
  }
  const std::size_t R = rows.size();
  for (auto& p : parts_)
    for (std::size_t red = 0; red <= p.degree; ++red) {
      if (!good(p, red)) continue;
      if (p.good_hi < 0) p.good_lo = static_cast<std::ptrdiff_t>(red);
      p.good_hi = static_cast<std::ptrdiff_t>(red);
    }
  hat_cache_.resize(parts_.size());
  at_top_.resize(L);
  det_red_.assign(parts_.size(), 0);
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    det_open_.push_back(parts_[i].hi - parts_[i].lo);
    for (std::size_t j = parts_[i].lo; j < parts_[i].hi; ++j) row_part_.push_back(static_cast<std::uint32_t>(i));
  }
  std::unordered_map<std::uint64_t, std::size_t> pivot_index;
  for (std::size_t j = 0; j < R; ++j) {
    masks_.push_back(masks ? (*masks)[rows[j].first] : family.coin_mask(rows[j].first));
    if (rows[j].second == block_) at_top_[static_cast<std::size_t>(masks_.back().top())].push_back(j);
    row_block_.push_back(rows[j].second);
    if (rows[j].second == block_) ++current_rows_;
    Row row{masks_.back(), BitVec(R), rows[j].second, false};
    row.combo.set(j, true);
    for (;;) {
      const auto t = row.vec.top();
      if (t < 0) {
        if (row.block != block_) ++other_deps_;
        deps_.push_back(std::move(row));
        break;
      }
      const std::uint64_t key = (static_cast<std::uint64_t>(row.block) << 32) | static_cast<std::uint64_t>(t);
      auto it = pivot_index.find(key);
      if (it == pivot_index.end()) {
        pivot_index.emplace(key, pivots_.size());
        if (row.block == block_) {
          pivot_at_[t] = static_cast<std::ptrdiff_t>(pivots_.size());
          ++live_pivots_;
        }
        pivots_.push_back(std::move(row));
        break;
      }
      row.vec ^= pivots_[it->second].vec;
      row.combo ^= pivots_[it->second].combo;
    }
  }
}

bool LocalExpectation::good(const Part& p, std::size_t red) const {
  const double limit = (1.0 + lambda_) * static_cast<double>(p.degree) / 2.0;
  const std::size_t blue = p.degree - red;
  return static_cast<double>(red) <= limit && static_cast<double>(blue) <= limit;
}

namespace {

std::vector<double> binomial_pmf(std::size_t n) {
  std::vector<double> pmf(n + 1);
  const double ln2 = std::log(2.0);
  for (std::size_t w = 0; w <= n; ++w)
    pmf[w] = std::exp(std::lgamma(n + 1.0) - std::lgamma(w + 1.0) - std::lgamma(n - w + 1.0) - n * ln2);
  return pmf;
}

}  // namespace

double LocalExpectation::mass(std::size_t n, std::ptrdiff_t a, std::ptrdiff_t b) const {
  a = std::max<std::ptrdiff_t>(a, 0);
  b = std::min<std::ptrdiff_t>(b, static_cast<std::ptrdiff_t>(n));
  if (b < a) return 0.0;
  auto it = cdf_cache_.find(n);
  if (it == cdf_cache_.end()) {
    const auto pmf = binomial_pmf(n);
    std::vector<double> cdf(n + 2, 0.0);
    for (std::size_t x = 0; x <= n; ++x) cdf[x + 1] = cdf[x] + pmf[x];
    it = cdf_cache_.emplace(n, std::move(cdf)).first;
  }
  return it->second[b + 1] - it->second[a];
}

// E over uniform y on the part's random rows of good(|y|)·(−1)^{y_1+…+y_t}.
double LocalExpectation::hat(std::size_t i, std::size_t t) const {
  const Part& p = parts_[i];
  const std::size_t n = p.hi - p.lo;
  auto& cache = hat_cache_[i];
  if (cache.empty()) cache.assign(n + 1, std::numeric_limits<double>::quiet_NaN());
  if (!std::isnan(cache[t])) return cache[t];
  const auto signs = binomial_pmf(t);
  double sum = 0;
  for (std::size_t j = 0; j <= t; ++j) {
    // j red, t − j blue among the t
    const auto base = static_cast<std::ptrdiff_t>(p.fixed_red + j);
    sum += ((t - j) & 1 ? -1.0 : 1.0) * signs[j] * mass(n - t, p.good_lo - base, p.good_hi - base);
  }
  cache[t] = sum;
  return sum;
}

double LocalExpectation::independent(int next) const {
  double ok = 1;
  for (std::size_t i = 0; i < parts_.size() && ok > 0; ++i) {
    std::size_t red = det_red_[i] + parts_[i].fixed_red, open = det_open_[i];
    if (next >= 0)
      for (std::size_t j : at_top_[fixed_]) {
        if (row_part_[j] != i) continue;
        red += (masks_[j].dot(prefix_) ^ (next == 1)) ? 0 : 1;
        --open;
      }
    const auto r = static_cast<std::ptrdiff_t>(red);
    ok *= mass(open, parts_[i].good_lo - r, parts_[i].good_hi - r);
  }
  return std::clamp(1.0 - ok, 0.0, 1.0);
}

double LocalExpectation::characters(const std::vector<const Row*>& deps, const std::vector<char>& flips) const {
  const std::size_t d = deps.size();
  BitVec u(masks_.size());
  bool sign = false;
  double sum = 0;
  auto term = [&]() {
    double t = 1;
    for (std::size_t i = 0; i < parts_.size() && t != 0; ++i) t *= hat(i, u.count_range(parts_[i].lo, parts_[i].hi));
    return t;
  };
  sum += term();
  for (std::uint64_t g = 1; g < (std::uint64_t{1} << d); ++g) {
    const unsigned b = std::countr_zero(g);
    u ^= deps[b]->combo;
    sign ^= deps[b]->constant ^ (flips[b] != 0);
    const double t = term();
    sum += sign ? -t : t;
  }
  return std::clamp(1.0 - sum, 0.0, 1.0);
}

double LocalExpectation::enumerate(int next) const {
  const std::size_t boundary = fixed_ + (next >= 0 ? 1 : 0);
  BitVec prefix = prefix_;
  if (next >= 0) prefix.set(fixed_, next == 1);
  // random pivots of the current block, in top order
  std::vector<std::size_t> random;
  std::unordered_map<std::ptrdiff_t, std::size_t> slot;
  for (std::size_t c = boundary; c < pivot_at_.size(); ++c)
    if (pivot_at_[c] >= 0) {
      slot[static_cast<std::ptrdiff_t>(c)] = random.size();
      random.push_back(static_cast<std::size_t>(pivot_at_[c]));
    }
  const std::size_t r = random.size();
  struct Coin {
    std::size_t part;
    bool constant;
    std::uint32_t mask;
  };
  std::vector<Coin> coins;
  std::vector<std::size_t> others(parts_.size(), 0);
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    for (std::size_t j = parts_[i].lo; j < parts_[i].hi; ++j) {
      if (row_block_[j] != block_) {
        ++others[i];
        continue;
      }
      BitVec vec = masks_[j];
      Coin c{i, false, 0};
      for (auto t = vec.top(); t >= static_cast<std::ptrdiff_t>(fixed_); t = vec.top()) {
        const auto piv = pivot_at_[t];
        if (piv < 0) throw std::logic_error("coin outside the pivot span");
        vec ^= pivots_[piv].vec;
        if (t >= static_cast<std::ptrdiff_t>(boundary))
          c.mask ^= std::uint32_t{1} << slot[t];
        else
          c.constant ^= pivots_[piv].vec.dot(prefix);
      }
      c.constant ^= vec.dot(prefix);
      coins.push_back(c);
    }
  }
  // per part: P(good | red count among current-block coins)
  std::vector<std::vector<double>> table(parts_.size());
  std::vector<std::size_t> current(parts_.size(), 0);
  for (const auto& c : coins) ++current[c.part];
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    table[i].assign(current[i] + 1, 0.0);
    for (std::size_t x = 0; x <= current[i]; ++x) {
      const auto base = static_cast<std::ptrdiff_t>(parts_[i].fixed_red + x);
      table[i][x] = mass(others[i], parts_[i].good_lo - base, parts_[i].good_hi - base);
    }
  }
  // red − blue among a part's current coins, for every pivot assignment (Walsh–Hadamard)
  const std::size_t size = std::size_t{1} << r;
  std::vector<std::vector<double>> diff(parts_.size(), std::vector<double>(size, 0.0));
  for (const auto& c : coins) diff[c.part][c.mask] += c.constant ? -1.0 : 1.0;
  for (auto& f : diff)
    for (std::size_t len = 1; len < size; len <<= 1)
      for (std::size_t i = 0; i < size; i += len << 1)
        for (std::size_t j = i; j < i + len; ++j) {
          const double u = f[j], v = f[j + len];
          f[j] = u + v;
          f[j + len] = u - v;
        }
  double sum = 0;
  for (std::size_t z = 0; z < size; ++z) {
    double t = 1;
    for (std::size_t i = 0; i < parts_.size() && t != 0; ++i) {
      const auto red = static_cast<std::size_t>(std::llround((static_cast<double>(current[i]) + diff[i][z]) / 2));
      t *= table[i][red];
    }
    sum += t;
  }
  return std::clamp(1.0 - sum / static_cast<double>(size), 0.0, 1.0);
}

double LocalExpectation::evaluate(int next, AlphaStats* stats) const {
  if (!relevant_) return 0.0;
  const Row* hyp = next >= 0 && fixed_ < pivot_at_.size() && pivot_at_[fixed_] >= 0 ? &pivots_[pivot_at_[fixed_]] : nullptr;
  const std::size_t d = deps_.size() + (hyp ? 1 : 0);
  const std::size_t live = live_pivots_ - (hyp ? 1 : 0);
  if (d <= limit_) {
    if (stats) ++stats->exact;
    std::vector<const Row*> deps;
    std::vector<char> flips(d, 0);
    for (const auto& row : deps_) deps.push_back(&row);
    if (hyp) {
      // its top bit is the one being fixed; a pivot's own constant is unused
      deps.push_back(hyp);
      flips.back() = static_cast<char>(hyp->vec.dot(prefix_) ^ (next == 1));
    }
    return characters(deps, flips);
  }
  if (other_deps_ == 0 && live <= limit_ && limit_ < 32) {
    if (stats) {
      ++stats->exact;
      ++stats->enumerated;
    }
    return enumerate(next);
  }
  if (stats) ++stats->approx;
  return independent(next);
}

double LocalExpectation::expectation(AlphaStats* stats) const { return evaluate(-1, stats); }

double LocalExpectation::alpha(bool b, AlphaStats* stats) const { return evaluate(b ? 1 : 0, stats); }

void LocalExpectation::fix(bool b) {
  if (!relevant_) {
    ++fixed_;
    return;
  }
  if (fixed_ >= prefix_.size()) throw std::logic_error("every seed bit is already fixed");
  prefix_.set(fixed_, b);
  for (std::size_t j : at_top_[fixed_]) {
    det_red_[row_part_[j]] += masks_[j].dot(prefix_) ? 0 : 1;
    --det_open_[row_part_[j]];
  }
  const auto piv = pivot_at_[fixed_];
  if (piv >= 0) {
    Row row = pivots_[piv];
    row.constant = row.vec.dot(prefix_);
    deps_.push_back(std::move(row));
    pivot_at_[fixed_] = -1;
    --live_pivots_;
  }
  ++fixed_;
}

double conditional_alpha(const KWiseFamily& family, std::span<const CoinView> coins, double lambda, double threshold,
                         std::uint32_t block, const BitVec& prefix, std::size_t prefix_len, bool b, unsigned limit) {
  LocalExpectation le(family, coins, lambda, threshold, block, limit);
  for (std::size_t i = 0; i < prefix_len; ++i) le.fix(prefix.get(i));
  return le.alpha(b);
}

// ---------------------------------------------------------------- derandomization

namespace {

struct Record {
  std::uint32_t cluster = 0;
  std::ptrdiff_t parent = -1;        // port; −1 at the root
  std::vector<std::size_t> down;     // tree children and registered reporters
  std::size_t children = 0;
  bool tree = false;                 // v ∈ T_C
  bool member = false;               // v ∈ C
  bool near = false;                 // v ∈ N(C)
  std::size_t stage = 0;             // 0 = relevance flag, i+1 = seed bit i
  std::size_t got = 0;
  std::uint64_t s0 = 0, s1 = 0;
  bool open = false;                 // collecting for `stage`
  bool finished = false;
  BitVec prefix;
};

struct DerandNode {
  std::uint32_t cluster = 0;
  std::uint32_t part = 0;
  std::vector<std::uint32_t> nbr_cluster;
  std::vector<std::uint32_t> nbr_part;
  std::vector<std::int8_t> nbr_side;
  std::int8_t side = -1;
  std::vector<Record> records;
  std::optional<LocalExpectation> le;
  PortQueues queues;
  AlphaStats stats;
  bool skipped_root = false;
};

// One round: every node tells its neighbors its cluster and part.
struct DerandSetup {
  struct State {
    DerandNode* node = nullptr;
  };
  Vocabulary vocab{{"cid"}};
  unsigned part_width = 1;
  const Vocabulary& vocabulary() const { return vocab; }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    DerandNode& d = *s.node;
    if (ctx.round == 0) {
      d.nbr_cluster.assign(ctx.degree(), 0);
      d.nbr_part.assign(ctx.degree(), 0);
      d.nbr_side.assign(ctx.degree(), -1);
      out.broadcast(Message(0).id(d.cluster).raw(d.part, part_width));
      return Status::running;
    }
    for (std::size_t p = 0; p < in.size(); ++p)
      for (const Message& m : in[p]) {
        d.nbr_cluster[p] = static_cast<std::uint32_t>(m[0]);
        d.nbr_part[p] = static_cast<std::uint32_t>(m[1]);
      }
    return Status::halted;
  }
};

enum Tag : std::uint16_t { kReg, kFlag, kSum, kGo, kSkip, kBit, kSide };

struct SeedFixing {
  struct State {
    DerandNode* node = nullptr;
  };
  Vocabulary vocab{{"reg", "flag", "sum", "go", "skip", "bit", "side"}};
  const KWiseFamily* family = nullptr;
  double lambda = 0;
  double threshold = 0;
  unsigned limit = 12;
  unsigned sum_width = 64;
  double scale = 1;

  const Vocabulary& vocabulary() const { return vocab; }

  Record* find(DerandNode& d, std::uint64_t cluster) const {
    for (auto& r : d.records)
      if (r.cluster == cluster) return &r;
    return nullptr;
  }

  std::uint64_t encode(double a) const { return static_cast<std::uint64_t>(std::llround(a * scale)); }

  // own contribution for the record's current stage
  void enter(const NodeContext& ctx, DerandNode& d, Record& r) const {
    r.open = true;
    r.got = 0;
    r.s0 = r.s1 = 0;
    if (r.near && d.le) {
      if (r.stage == 0) {
        r.s0 = d.le->relevant() && !d.le->constant_in_block() ? 1 : 0;
      } else {
        r.s0 = encode(d.le->alpha(false, &d.stats));
        r.s1 = encode(d.le->alpha(true, &d.stats));
      }
    }
    try_close(ctx, d, r);
  }

  void try_close(const NodeContext& ctx, DerandNode& d, Record& r) const {
    if (!r.open || r.got < r.down.size()) return;
    r.open = false;
    if (r.parent >= 0) {
      if (r.stage == 0)
        d.queues.push(r.parent, Message(kFlag).id(r.cluster).flag(r.s0 != 0));
      else
        d.queues.push(r.parent, Message(kSum).id(r.cluster).raw(r.s0, sum_width).raw(r.s1, sum_width));
      return;
    }
    // leader
    if (r.stage == 0) {
      if (r.s0 == 0) {
        d.skipped_root = true;
        apply_skip(ctx, d, r);
      } else {
        for (std::size_t p : r.down) d.queues.push(p, Message(kGo).id(r.cluster));
        r.stage = 1;
        enter(ctx, d, r);
      }
      return;
    }
    apply_bit(ctx, d, r, r.s1 < r.s0);
  }

  void apply_skip(const NodeContext& ctx, DerandNode& d, Record& r) const {
    for (std::size_t p : r.down) d.queues.push(p, Message(kSkip).id(r.cluster));
    finish(ctx, d, r);
  }

  void apply_bit(const NodeContext& ctx, DerandNode& d, Record& r, bool b) const {
    for (std::size_t p : r.down) d.queues.push(p, Message(kBit).id(r.cluster).flag(b));
    const std::size_t i = r.stage - 1;
    r.prefix.set(i, b);
    if (r.near && d.le) d.le->fix(b);
    if (i + 1 == family->seed_len()) {
      finish(ctx, d, r);
      return;
    }
    ++r.stage;
    enter(ctx, d, r);
  }

  void finish(const NodeContext& ctx, DerandNode& d, Record& r) const {
    r.finished = true;
    r.open = false;
    if (r.member) {
      d.side = family->eval(r.prefix, ctx.self) == 0 ? static_cast<std::int8_t>(Side::red)
                                                      : static_cast<std::int8_t>(Side::blue);
      for (std::size_t p = 0; p < ctx.degree(); ++p) d.queues.push(p, Message(kSide).flag(d.side == 1));
    }
  }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    DerandNode& d = *s.node;
    if (ctx.round == 0) {
      d.queues.resize(ctx.degree());
      for (auto& r : d.records) {
        r.prefix = BitVec(family->seed_len());
        if (r.near && !r.tree) d.queues.push(static_cast<std::size_t>(r.parent), Message(kReg).id(r.cluster));
      }
      d.queues.flush(out);
      if (d.records.empty()) return Status::halted;
      out.sleep_until(1);
      return Status::running;
    }
    if (ctx.round == 1) {
      for (std::size_t p = 0; p < in.size(); ++p)
        for (const Message& m : in[p])
          if (m.tag == kReg) {
            Record* r = find(d, m[0]);
            if (!r) throw std::logic_error("registration for a cluster this node does not serve");
            r->down.push_back(p);
          }
      for (auto& r : d.records) enter(ctx, d, r);
    } else {
      for (std::size_t p = 0; p < in.size(); ++p)
        for (const Message& m : in[p]) {
          if (m.tag == kSide) {
            d.nbr_side[p] = static_cast<std::int8_t>(m[0]);
            continue;
          }
          Record* r = find(d, m[0]);
          if (!r) throw std::logic_error("seed-fixing message for an unknown cluster");
          switch (m.tag) {
            case kFlag:
              r->s0 |= m[1];
              ++r->got;
              try_close(ctx, d, *r);
              break;
            case kSum:
              r->s0 += m[1];
              r->s1 += m[2];
              ++r->got;
              try_close(ctx, d, *r);
              break;
            case kGo:
              for (std::size_t q : r->down) d.queues.push(q, Message(kGo).id(r->cluster));
              r->stage = 1;
              enter(ctx, d, *r);
              break;
            case kSkip:
              apply_skip(ctx, d, *r);
              break;
            case kBit:
              apply_bit(ctx, d, *r, m[1] != 0);
              break;
          }
        }
    }
    d.queues.flush(out);
    if (!d.queues.empty()) return Status::running;
    const bool done = std::all_of(d.records.begin(), d.records.end(), [](const Record& r) { return r.finished; });
    if (done) return Status::halted;
    out.sleep_until(static_cast<std::size_t>(-1));
    return Status::running;
  }
};

}  // namespace

DerandResult derand_split(const Graph& g, const Partition& partition, double lambda, const ClusterDecomposition& dec,
                          const SimConfig& sim, const SplitConfig& cfg) {
  const std::size_t n = g.size();
  if (partition.part_of.size() != n) throw std::invalid_argument("partition size differs from node count");
  const auto check = validate_decomposition(g, dec, 2);
  if (!check.valid) throw std::invalid_argument("invalid decomposition: " + check.problems.front());
  const KWiseFamily fam = family_for(n, cfg);
  DerandResult res;
  res.seed_bits = fam.seed_len();
  const double threshold = flag_threshold(n, lambda, cfg.threshold_const);

  std::vector<DerandNode> nodes(n);
  for (NodeId v = 0; v < n; ++v) {
    nodes[v].cluster = dec.cluster_of[v];
    nodes[v].part = partition.part_of[v];
  }
  {
    DerandSetup setup;
    setup.part_width = width_for(std::max<std::uint32_t>(partition.parts, 2));
    std::vector<DerandSetup::State> st(n);
    for (NodeId v = 0; v < n; ++v) st[v].node = &nodes[v];
    res.trace.append(run(g, setup, st, sim, {"derand_setup", 0xde0}));
  }

  const unsigned L = width_for(std::max<std::size_t>(n, 2));
  SeedFixing prog;
  prog.family = &fam;
  prog.lambda = lambda;
  prog.threshold = threshold;
  prog.limit = cfg.exact_limit;
  prog.sum_width = std::min(64u, 6 * L);
  prog.scale = std::ldexp(1.0, static_cast<int>(prog.sum_width - L - 1));

  std::vector<BitVec> masks(n);
  for (NodeId v = 0; v < n; ++v) masks[v] = fam.coin_mask(v);
  std::vector<std::vector<std::uint32_t>> by_color(dec.colors);
  for (std::uint32_t c = 0; c < dec.clusters(); ++c) by_color[dec.color_of_cluster[c]].push_back(c);
  res.seeds.assign(dec.clusters(), BitVec(fam.seed_len()));

  for (std::uint32_t color = 0; color < dec.colors; ++color) {
    for (auto& d : nodes) {
      d.records.clear();
      d.le.reset();
      d.skipped_root = false;
    }
    for (std::uint32_t c : by_color[color]) {
      for (const auto& [x, p] : dec.tree[c]) {
        Record r;
        r.cluster = c;
        r.tree = true;
        r.member = dec.cluster_of[x] == c;
        r.parent = x == p ? -1 : static_cast<std::ptrdiff_t>(g.port_of(x, p));
        nodes[x].records.push_back(std::move(r));
      }
      for (const auto& [x, p] : dec.tree[c]) {
        if (x == p) continue;
        auto& rec = nodes[p].records;
        auto it = std::find_if(rec.begin(), rec.end(), [&](const Record& r) { return r.cluster == c; });
        it->down.push_back(static_cast<std::size_t>(g.port_of(p, x)));
      }
    }
    // N(C) membership, contacts and the local expectation
    for (NodeId v = 0; v < n; ++v) {
      DerandNode& d = nodes[v];
      const auto nb = g.neighbors(v);
      std::optional<std::uint32_t> near;
      if (dec.color_of_cluster[d.cluster] == color) near = d.cluster;
      for (std::size_t p = 0; p < nb.size() && !near; ++p)
        if (dec.color_of_cluster[d.nbr_cluster[p]] == color) near = d.nbr_cluster[p];
      if (!near) continue;
      Record* r = nullptr;
      for (auto& x : d.records)
        if (x.cluster == *near) r = &x;
      if (!r) {
        Record out;
        out.cluster = *near;
        for (std::size_t p = 0; p < nb.size(); ++p)
          if (d.nbr_cluster[p] == *near) {
            out.parent = static_cast<std::ptrdiff_t>(p);
            break;
          }
        d.records.push_back(std::move(out));
        r = &d.records.back();
      }
      r->near = true;
      std::vector<CoinView> coins(nb.size());
      for (std::size_t p = 0; p < nb.size(); ++p) coins[p] = {nb[p], d.nbr_part[p], d.nbr_side[p], d.nbr_cluster[p]};
      d.le.emplace(fam, coins, lambda, threshold, *near, cfg.exact_limit, &masks);
    }
    // tree children counted at their parents; reporters register in round 0
    for (auto& d : nodes)
      for (auto& r : d.records) r.children = r.down.size();

    std::vector<SeedFixing::State> st(n);
    for (NodeId v = 0; v < n; ++v) st[v].node = &nodes[v];
    res.trace.append(run(g, prog, st, sim, {"derand", 0xde1 + color}));
    for (std::uint32_t c : by_color[color]) {
      const NodeId root = dec.center[c];
      for (const auto& r : nodes[root].records)
        if (r.cluster == c) {
          if (!r.finished) throw std::logic_error("cluster seed was not fixed");
          res.seeds[c] = r.prefix;
        }
      res.skipped_clusters += nodes[root].skipped_root ? 1 : 0;
    }
  }
  res.split.side.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    if (nodes[v].side < 0) throw std::logic_error("node finished without a side");
    res.split.side[v] = static_cast<Side>(nodes[v].side);
    res.alpha.exact += nodes[v].stats.exact;
    res.alpha.enumerated += nodes[v].stats.enumerated;
    res.alpha.approx += nodes[v].stats.approx;
  }
  finish_split(g, partition, lambda, cfg.threshold_const, res.split);
  res.postcondition = res.split.flagged == 0;
  return res;
}

// ---------------------------------------------------------------- multi-phase

std::size_t split_levels(std::size_t n, std::size_t delta, double eps, const MultiPhaseConfig& cfg) {
  if (eps <= 0) throw std::invalid_argument("epsilon must be positive");
  if (delta <= 1) return 0;
  const double logd = std::log2(static_cast<double>(delta));
  const double logn = std::log2(static_cast<double>(std::max<std::size_t>(n, 2)));
  const double target = cfg.h_const * logn * logn * logn / (eps * eps);
  const double shrink = (1.0 + eps / (10.0 * logd)) / 2.0;
  double x = static_cast<double>(delta);
  std::size_t h = 0;
  while (x > target && h < 64) {
    x *= shrink;
    ++h;
  }
  return h;
}

MultiPhaseResult multi_phase_split(const Graph& g, double eps, const SimConfig& sim, const MultiPhaseConfig& cfg) {
  const std::size_t n = g.size();
  const std::size_t delta = g.max_degree();
  MultiPhaseResult r;
  r.partition.part_of.assign(n, 0);
  r.partition.parts = 1;
  r.h = split_levels(n, delta, eps, cfg);
  const double eps_p = std::min(1.0, eps / 4.0);
  r.lambda = delta > 1 ? eps_p / (10.0 * std::log2(static_cast<double>(delta))) : eps_p;
  r.delta_h = (1.0 + eps) * std::ldexp(static_cast<double>(delta), -static_cast<int>(r.h));
  if (r.h > 0) {
    r.decomposition = reference_decomposition(g, 2);
    for (std::size_t level = 0; level < r.h; ++level) {
      const auto s = derand_split(g, r.partition, r.lambda, r.decomposition, sim, cfg.split);
      r.trace.append(s.trace);
      r.flagged += s.split.flagged;
      for (NodeId v = 0; v < n; ++v)
        r.partition.part_of[v] = 2 * r.partition.part_of[v] + (s.split.side[v] == Side::blue ? 1 : 0);
      r.partition.parts *= 2;
    }
  }
  r.max_part_degree = max_part_degree(g, r.partition);
  r.audit = static_cast<double>(r.max_part_degree) <= r.delta_h;
  return r;
}

// ---------------------------------------------------------------- relay

RelayNet::RelayNet(const Graph& g, const Partition& partition) : g_(&g) {
  const std::size_t n = g.size();
  if (partition.part_of.size() != n) throw std::invalid_argument("partition size differs from node count");
  std::vector<Edge> edges;
  std::vector<std::uint32_t> seen(n, 0);
  std::uint32_t stamp = 0;
  for (NodeId v = 0; v < n; ++v) {
    ++stamp;
    const auto pv = partition.part_of[v];
    for (NodeId x : g.neighbors(v)) {
      if (partition.part_of[x] == pv && x > v && seen[x] != stamp) {
        seen[x] = stamp;
        edges.emplace_back(v, x);
      }
      for (NodeId w : g.neighbors(x))
        if (w > v && partition.part_of[w] == pv && seen[w] != stamp) {
          seen[w] = stamp;
          edges.emplace_back(v, w);
        }
    }
  }
  h_ = Graph::from_edges(n, edges);
  via_.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    const auto hn = h_.neighbors(v);
    via_[v].resize(hn.size());
    for (std::size_t p = 0; p < hn.size(); ++p) {
      const NodeId w = hn[p];
      if (g.adjacent(v, w)) {
        via_[v][p] = w;
        continue;
      }
      direct_only_ = false;
      // smallest common neighbor; adjacency lists are sorted
      const auto a = g.neighbors(v), b = g.neighbors(w);
      std::size_t i = 0, j = 0;
      while (a[i] != b[j]) (a[i] < b[j]) ? ++i : ++j;
      via_[v][p] = a[i];
    }
  }
  std::unordered_map<std::uint32_t, std::size_t> cnt;
  for (NodeId v = 0; v < n; ++v) {
    cnt.clear();
    for (NodeId x : g.neighbors(v)) delta_prime_ = std::max(delta_prime_, ++cnt[partition.part_of[x]]);
  }
  super_round_ = direct_only_ ? 2 : 2 + delta_prime_;
}

// ---------------------------------------------------------------- colorings

namespace {

Graph part_subgraph(const Graph& g, const Partition& p) {
  std::vector<Edge> edges;
  for (NodeId v = 0; v < g.size(); ++v)
    for (NodeId w : g.neighbors(v))
      if (v < w && p.part_of[v] == p.part_of[w]) edges.emplace_back(v, w);
  return Graph::from_edges(g.size(), edges);
}

void offset_by_part(Coloring& c, const Partition& p, std::uint64_t palette) {
  for (NodeId v = 0; v < c.size(); ++v) c[v] += static_cast<Color>(p.part_of[v] * palette);
}

}  // namespace

SplitColoring color_g_splitting(const Graph& g, double eps, const SimConfig& sim, const MultiPhaseConfig& cfg) {
  SplitColoring r;
  const std::size_t delta = g.max_degree();
  r.bound = (1.0 + eps) * static_cast<double>(delta);
  r.partition.part_of.assign(g.size(), 0);
  if (split_levels(g.size(), delta, eps / 2.0, cfg) > 0) {
    auto mp = multi_phase_split(g, eps / 2.0, sim, cfg);
    r.trace.append(mp.trace);
    r.h = mp.h;
    r.partition = std::move(mp.partition);
  }
  const Graph parts = r.h > 0 ? part_subgraph(g, r.partition) : g;
  auto dc = color_direct(DirectNet{parts}, parts.max_degree(), sim);
  r.trace.append(dc.trace);
  r.palette_per_part = dc.palette;
  r.coloring = std::move(dc.coloring);
  offset_by_part(r.coloring, r.partition, r.palette_per_part);
  r.colors_bound = r.palette_per_part * r.partition.parts;
  return r;
}

SplitColoring color_g2_splitting(const Graph& g, double eps, const SimConfig& sim, const MultiPhaseConfig& cfg) {
  SplitColoring r;
  const std::size_t delta = g.max_degree();
  r.bound = (1.0 + eps) * static_cast<double>(delta) * static_cast<double>(delta);
  const double eps_p = std::min(1.0, eps / 4.0);
  auto mp = multi_phase_split(g, eps_p, sim, cfg);
  r.trace.append(mp.trace);
  r.h = mp.h;
  r.partition = std::move(mp.partition);
  const RelayNet net(g, r.partition);
  r.super_round = net.super_round();
  const std::size_t dh = net.h().max_degree();
  if (split_levels(g.size(), dh, eps_p / 2.0, cfg) > 0) {
    // the parts are large enough to be split again; that level runs on H itself
    auto inner = color_g_splitting(net.h(), eps_p, sim, cfg);
    r.trace.append(inner.trace);
    r.palette_per_part = inner.colors_bound;
    r.coloring = std::move(inner.coloring);
  } else {
    auto dc = color_direct(net, dh, sim);
    r.trace.append(dc.trace);
    r.palette_per_part = dc.palette;
    r.coloring = std::move(dc.coloring);
  }
  offset_by_part(r.coloring, r.partition, r.palette_per_part);
  r.colors_bound = r.palette_per_part * r.partition.parts;
  return r;
}

// ---------------------------------------------------------------- export

void write_partition_csv(std::ostream& os, const Partition& p) {
  os << "node,part\n";
  for (NodeId v = 0; v < p.part_of.size(); ++v) os << v << ',' << p.part_of[v] << '\n';
}

void write_decomposition_csv(std::ostream& os, const ClusterDecomposition& d) {
  os << "node,cluster,color\n";
  for (NodeId v = 0; v < d.cluster_of.size(); ++v)
    os << v << ',' << d.cluster_of[v] << ',' << d.color_of_cluster[d.cluster_of[v]] << '\n';
}

}  // namespace d2
