#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "d2color/congest.hpp"
#include "d2color/graph.hpp"
#include "d2color/types.hpp"

namespace d2 {

// ---------------------------------------------------------------- hashing

/// Bit string of fixed length, bit i in word i/64.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t bits) : bits_(bits), w_((bits + 63) / 64, 0) {}

  std::size_t size() const { return bits_; }
  bool get(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool b) {
    if (b)
      w_[i >> 6] |= std::uint64_t{1} << (i & 63);
    else
      w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  }
  void flip(std::size_t i) { w_[i >> 6] ^= std::uint64_t{1} << (i & 63); }
  BitVec& operator^=(const BitVec& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
    return *this;
  }
  /// Parity of the AND with `o`.
  bool dot(const BitVec& o) const;
  /// Highest set bit, or -1.
  std::ptrdiff_t top() const;
  bool none() const;
  std::size_t count() const;
  std::size_t count_range(std::size_t lo, std::size_t hi) const;  ///< set bits in [lo, hi)
  std::span<const std::uint64_t> words() const { return w_; }
  std::span<std::uint64_t> words() { return w_; }
  bool operator==(const BitVec&) const = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> w_;
};

/// GF(2^m) with an irreducible modulus (m ≤ 32).
struct Gf2m {
  unsigned m = 1;
  std::uint64_t modulus = 0b11;  ///< includes the x^m term

  static Gf2m make(unsigned m);
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const;
};

/// Ben-Or test for a GF(2) polynomial of degree ≥ 1 (bit i = coefficient of x^i).
bool irreducible_gf2(std::uint64_t poly);

/// Degree-(k−1) polynomials over GF(2^m), m = max(a, c): the seed holds the
/// k coefficients (coefficient j in bits [j·m, (j+1)·m)), outputs are the low
/// c bits of the value at the input.
class KWiseFamily {
 public:
  KWiseFamily(std::size_t k, unsigned a, unsigned c = 1);

  std::size_t k() const { return k_; }
  unsigned a() const { return a_; }
  unsigned c() const { return c_; }
  unsigned m() const { return field_.m; }
  const Gf2m& field() const { return field_; }
  std::size_t seed_len() const { return k_ * field_.m; }

  /// Throws std::invalid_argument on a seed of the wrong length or an input ≥ 2^a.
  std::uint64_t eval(const BitVec& seed, std::uint64_t x) const;
  /// For c = 1: the GF(2)-linear form w_x with eval(seed, x) = w_x · seed.
  BitVec coin_mask(std::uint64_t x) const;
  BitVec random_seed(std::uint64_t key) const;

 private:
  std::size_t k_;
  unsigned a_, c_;
  Gf2m field_;
  std::vector<std::uint64_t> low_bit_;  ///< y ↦ bit 0 of α^b·y as a mask, per b
};

// ---------------------------------------------------------------- decomposition

struct ClusterDecomposition {
  std::vector<std::uint32_t> cluster_of;
  std::vector<std::uint32_t> color_of_cluster;  ///< 0-based
  std::vector<NodeId> center;                   ///< root of each tree
  /// (node, parent) pairs of each cluster's tree in G; the root is its own parent.
  std::vector<std::vector<std::pair<NodeId, NodeId>>> tree;
  std::uint32_t colors = 0;     ///< α
  std::size_t depth = 0;        ///< max tree depth; diameter ≤ 2·depth
  std::size_t congestion = 0;   ///< κ: max same-color trees through one edge
  std::size_t k_dist = 1;

  std::size_t clusters() const { return color_of_cluster.size(); }
  std::size_t diameter_bound() const { return 2 * depth; }
};

struct DecompositionCheck {
  bool valid = false;
  std::vector<std::string> problems;
};

/// Greedy ball carving on G^k_dist, trees are unions of G-shortest paths
/// from the center.
ClusterDecomposition reference_decomposition(const Graph& g, std::size_t k_dist = 2);
DecompositionCheck validate_decomposition(const Graph& g, const ClusterDecomposition& d, std::size_t k_dist,
                                          std::optional<std::size_t> max_congestion = std::nullopt);

// ---------------------------------------------------------------- splitting

struct SplitConfig {
  double threshold_const = 12.0;    ///< flags gate at c·log n/λ²
  std::optional<std::size_t> k;     ///< independence, default 10⌈log₂ n⌉
  unsigned exact_limit = 12;        ///< max 2^limit terms per exact evaluation
};

struct SplitResult {
  std::vector<Side> side;
  std::vector<char> flags;  ///< oracle flags of `side`
  std::size_t flagged = 0;
  double threshold = 0;
};

std::size_t split_independence(std::size_t n, const SplitConfig& cfg);

/// Zero-round randomized splitting: one uniform seed per cluster,
/// side(v) = red iff kwise_eval(seed of v's cluster, v) = 0.
SplitResult randomized_split(const Graph& g, const Partition& partition, double lambda,
                             const std::vector<std::uint32_t>& cluster_of, std::uint64_t seed,
                             const SplitConfig& cfg = {});

/// Which coins v sees: neighbors with a known side, or a coin driven by the
/// seed of some cluster ("block").
struct CoinView {
  NodeId id = 0;
  std::uint32_t part = 0;
  std::int8_t fixed = -1;  ///< Side as 0/1, or −1 when random
  std::uint32_t block = 0;
};

struct AlphaStats {
  std::uint64_t exact = 0;      ///< evaluations done exactly
  std::uint64_t enumerated = 0; ///< ... of which by enumerating the cluster's pivots
  std::uint64_t approx = 0;     ///< evaluations that fell back to independence
};

/// E[F_v | fixed seed bits] for one node, maintained while the bits of one
/// block (the cluster being derandomized) are fixed in order. Other blocks
/// are uniformly random. Exact by a character expansion over the linear
/// dependencies among the coins, or by enumerating the cluster's remaining
/// pivots; when both exceed 2^limit terms, falls back to coins that are
/// independent apart from those the prefix already determines.
class LocalExpectation {
 public:
  /// `masks`, when given, holds coin_mask(id) for every id.
  LocalExpectation(const KWiseFamily& family, std::span<const CoinView> coins, double lambda, double threshold,
                   std::uint32_t current_block, unsigned limit, const std::vector<BitVec>* masks = nullptr);

  /// False when no part of v reaches the threshold: F_v is identically 0.
  bool relevant() const { return relevant_; }
  /// True when no coin depends on the current block.
  bool constant_in_block() const { return current_rows_ == 0; }
  std::size_t fixed_bits() const { return fixed_; }
  std::size_t dependencies() const { return deps_.size(); }

  double expectation(AlphaStats* stats = nullptr) const;
  /// E[F_v | prefix, next bit = b].
  double alpha(bool b, AlphaStats* stats = nullptr) const;
  /// Fixes the next bit of the current block.
  void fix(bool b);

 private:
  struct Row {
    BitVec vec;    ///< over the block's seed bits
    BitVec combo;  ///< over random rows
    std::uint32_t block = 0;
    bool constant = false;  ///< parity with the fixed prefix (dependencies only)
  };
  struct Part {
    std::size_t degree = 0;
    std::size_t fixed_red = 0;
    std::size_t lo = 0, hi = 0;  ///< random rows [lo, hi)
    std::ptrdiff_t good_lo = 0, good_hi = -1;  ///< red counts that keep F = 0
  };

  double evaluate(int next, AlphaStats* stats) const;
  double characters(const std::vector<const Row*>& deps, const std::vector<char>& flips) const;
  double enumerate(int next) const;
  double independent(int next) const;
  /// P(Bin(n, 1/2) ∈ [a, b]).
  double mass(std::size_t n, std::ptrdiff_t a, std::ptrdiff_t b) const;
  bool good(const Part& p, std::size_t red) const;
  double hat(std::size_t part, std::size_t t) const;

  const KWiseFamily* family_;
  double lambda_;
  unsigned limit_;
  std::uint32_t block_;
  bool relevant_ = false;
  std::vector<Part> parts_;
  std::vector<BitVec> masks_;  ///< original coin masks of random rows
  std::vector<std::uint32_t> row_block_;
  std::vector<std::uint32_t> row_part_;
  std::vector<std::vector<std::size_t>> at_top_;  ///< current-block rows by top column
  std::vector<std::size_t> det_red_, det_open_;  ///< per part: red among determined rows, rows still open
  std::vector<Row> pivots_;   ///< reduced rows with distinct top bits, per block
  std::vector<std::ptrdiff_t> pivot_at_;  ///< current block: column → pivot index
  std::vector<Row> deps_;
  std::size_t current_rows_ = 0;
  std::size_t other_deps_ = 0;  ///< dependencies outside the current block
  std::size_t fixed_ = 0;
  BitVec prefix_;
  mutable std::vector<std::vector<double>> hat_cache_;
  mutable std::unordered_map<std::size_t, std::vector<double>> cdf_cache_;
  std::size_t live_pivots_ = 0;  ///< current-block pivots at columns ≥ fixed_
};

/// E[F_v | prefix, next = b] from scratch (test entry point).
double conditional_alpha(const KWiseFamily& family, std::span<const CoinView> coins, double lambda, double threshold,
                         std::uint32_t block, const BitVec& prefix, std::size_t prefix_len, bool b,
                         unsigned limit = 12);

struct DerandResult {
  SplitResult split;
  SimTrace trace;
  std::vector<BitVec> seeds;  ///< per cluster
  std::size_t seed_bits = 0;
  std::size_t skipped_clusters = 0;  ///< no relevant node around, seed left at 0
  AlphaStats alpha;
  bool postcondition = false;  ///< Σ F_v = 0
};

/// Method of conditional expectations over per-cluster seeds, one color
/// class at a time; Σα_b is aggregated up each cluster tree and the leader
/// broadcasts the chosen bit. Throws std::invalid_argument on a decomposition
/// that does not separate same-colored clusters by more than two hops.
DerandResult derand_split(const Graph& g, const Partition& partition, double lambda, const ClusterDecomposition& dec,
                          const SimConfig& sim, const SplitConfig& cfg = {});

// ---------------------------------------------------------------- multi-phase

struct MultiPhaseConfig {
  double h_const = 1200.0;  ///< h is the least with (1+ε/(10 log Δ))^h 2^{−h} Δ ≤ h_const ε^{−2} log³ n
  SplitConfig split;
};

std::size_t split_levels(std::size_t n, std::size_t delta, double eps, const MultiPhaseConfig& cfg = {});

struct MultiPhaseResult {
  Partition partition;
  std::size_t h = 0;
  double lambda = 0;
  double delta_h = 0;  ///< (1+ε)2^{−h}Δ
  std::size_t max_part_degree = 0;
  bool audit = false;  ///< max_part_degree ≤ delta_h
  std::size_t flagged = 0;  ///< Σ F_v over all levels
  SimTrace trace;
  ClusterDecomposition decomposition;
};

MultiPhaseResult multi_phase_split(const Graph& g, double eps, const SimConfig& sim, const MultiPhaseConfig& cfg = {});

// ---------------------------------------------------------------- relay

/// Runs programs written for H = ∪ G²[V_i] on G: one H-round is a super-round
/// of `super_round` kernel rounds in which messages along G-edges go
/// directly and the others through the smallest common neighbor.
class RelayNet {
 public:
  RelayNet(const Graph& g, const Partition& partition);

  std::size_t size() const { return g_->size(); }
  const Graph& graph() const { return *g_; }
  const Graph& h() const { return h_; }
  std::size_t delta_prime() const { return delta_prime_; }
  bool direct_only() const { return direct_only_; }
  std::size_t super_round() const { return super_round_; }
  void set_super_round(std::size_t t) { super_round_ = t; }
  /// Middle node for H-port p of v, or the target itself for a G-edge.
  NodeId via(NodeId v, std::size_t p) const { return via_[v][p]; }

  template <NodeProgram P>
  SimTrace run(const P& program, std::vector<typename P::State>& states, const SimConfig& cfg,
               const RunOptions& opts = {}) const;

 private:
  const Graph* g_;
  Graph h_;
  std::vector<std::vector<NodeId>> via_;
  std::size_t delta_prime_ = 0;
  bool direct_only_ = true;
  std::size_t super_round_ = 2;
};

class RelayOverrun : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class P>
struct Relay {
  struct State {
    typename P::State* inner = nullptr;
    NodeContext hctx;
    Outbox hout;
    std::vector<Packet> hin;
    bool mail = false;
    bool halted = false;
    bool started = false;
    std::size_t wake = 0;  ///< in super-rounds
    std::uint64_t draws = 0;
    PortQueues queues;
  };

  const P* inner = nullptr;
  const RelayNet* net = nullptr;
  SimConfig cfg;
  std::uint64_t stream = 0;
  BitWidths w;
  Vocabulary vocab{{"direct", "relay", "deliver"}};
  std::size_t inner_bandwidth = 0;
  unsigned inner_tag_bits = 0;

  const Vocabulary& vocabulary() const { return vocab; }
  BitWidths widths() const { return w; }

  // inner message → wrapper message carrying the inner tag first
  Message wrap(std::uint16_t tag, const Message& m, std::optional<NodeId> addr) const {
    Message out(tag);
    if (addr) out.id(*addr);
    out.raw(m.tag, inner_tag_bits);
    for (const auto& f : m.fields) out.fields.push_back(f);
    return out;
  }
  Message unwrap(const Message& m, std::size_t skip) const {
    Message out(static_cast<std::uint16_t>(m[skip]));
    for (std::size_t i = skip + 1; i < m.size(); ++i) out.fields.push_back(m.fields[i]);
    return out;
  }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    const NodeId v = ctx.self;
    const Graph& h = net->h();
    const std::size_t T = net->super_round();
    if (!s.started) {
      s.started = true;
      s.queues.resize(ctx.degree());
      s.hctx.self = v;
      s.hctx.neighbors = h.neighbors(v);
      s.hctx.n = h.size();
      s.hctx.delta = h.max_degree();
      s.hctx.bandwidth = inner_bandwidth;
      s.hctx.widths = &w;
      s.hctx.vocab = &inner->vocabulary();
      s.hin.assign(h.degree(v), {});
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        switch (m.tag) {
          case 0: {
            const auto hp = s.hctx.port_of(ctx.neighbors[p]);
            if (hp < 0) throw std::logic_error("relay: direct message from outside the part");
            s.hin[hp].push_back(unwrap(m, 0));
            s.mail = true;
            break;
          }
          case 1: {
            const auto target = static_cast<NodeId>(m[0]);
            const auto gp = ctx.port_of(target);
            if (gp < 0) throw std::logic_error("relay: target is not a neighbor of the middle");
            Message fwd = m;
            fwd.tag = 2;
            fwd.fields[0].value = ctx.neighbors[p];
            s.queues.push(gp, std::move(fwd));
            break;
          }
          case 2: {
            const auto hp = s.hctx.port_of(static_cast<NodeId>(m[0]));
            if (hp < 0) throw std::logic_error("relay: delivered message from outside the part");
            s.hin[hp].push_back(unwrap(m, 1));
            s.mail = true;
            break;
          }
        }
      }
    }
    const bool boundary = ctx.round % T == 0;
    const std::size_t sr = ctx.round / T;
    if (boundary && ctx.round > 0 && !s.queues.empty())
      throw RelayOverrun("relay traffic did not drain within a super-round of " + std::to_string(T) + " rounds");
    if (boundary && (s.mail || (!s.halted && s.wake <= sr))) {
      s.hctx.round = sr;
      s.hout.reset(h.degree(v), &s.hctx);
      StreamRng rng(cfg.seed, stream, v, sr);
      const Status st = inner->step(s.hctx, *s.inner, Inbox(s.hin), s.hout, rng);
      s.draws += rng.draws();
      s.halted = st == Status::halted;
      s.wake = s.hout.wake_round();
      for (auto& pk : s.hin) pk.clear();
      s.mail = false;
      for (std::size_t hp : s.hout.dirty_ports()) {
        const NodeId target = s.hctx.neighbors[hp];
        const NodeId mid = net->via(v, hp);
        for (const Message& m : s.hout.packet(hp)) {
          if (!m.route.empty()) throw std::logic_error("relay: routed inner messages are not supported");
          if (mid == target)
            s.queues.push(static_cast<std::size_t>(ctx.port_of(target)), wrap(0, m, std::nullopt));
          else
            s.queues.push(static_cast<std::size_t>(ctx.port_of(mid)), wrap(1, m, target));
        }
      }
    }
    s.queues.flush(out);
    if (!s.queues.empty()) return Status::running;
    const std::size_t next = (sr + 1) * T;
    if (s.mail) {
      out.sleep_until(next);
      return Status::running;
    }
    if (s.halted) return Status::halted;
    out.sleep_until(std::max(next, s.wake * T));
    return Status::running;
  }
};

}  // namespace detail

template <NodeProgram P>
SimTrace RelayNet::run(const P& program, std::vector<typename P::State>& states, const SimConfig& cfg,
                       const RunOptions& opts) const {
  if (states.size() != size()) throw std::invalid_argument("state vector size differs from node count");
  detail::Relay<P> relay;
  relay.inner = &program;
  relay.net = this;
  relay.cfg = cfg;
  relay.stream = opts.stream;
  relay.w = BitWidths::for_graph(size(), h_.max_degree());
  if constexpr (HasWidths<P>) relay.w = program.widths();
  relay.inner_tag_bits = program.vocabulary().tag_bits();
  // room for the wrapper tag, one id and the inner tag
  const std::size_t header = relay.vocab.tag_bits() + relay.w.id + relay.inner_tag_bits;
  const std::size_t b = cfg.bandwidth_bits(size());
  relay.inner_bandwidth = b > header ? b - header : 1;
  std::vector<typename detail::Relay<P>::State> st(size());
  for (std::size_t v = 0; v < size(); ++v) st[v].inner = &states[v];
  SimTrace t = d2::run(*g_, relay, st, cfg, opts);
  for (const auto& s : st) t.rng_draws += s.draws;
  return t;
}

/// Proper (D+1)-coloring of the graph behind `net` (distance 1), D = its
/// max degree: Linial from the ids, then locally-iterative lines over F_q
/// with q > 4D, then color reduction.
struct DirectColoring {
  Coloring coloring;
  SimTrace trace;
  std::uint64_t palette = 0;  ///< D+1
  std::uint64_t q = 0;
};

template <class Net>
DirectColoring color_direct(const Net& net, std::size_t max_degree, const SimConfig& cfg);

// ---------------------------------------------------------------- colorings

struct SplitColoring {
  Coloring coloring;
  SimTrace trace;
  std::size_t h = 0;
  std::uint64_t palette_per_part = 0;
  std::uint64_t colors_bound = 0;  ///< ids used are below this
  double bound = 0;                ///< (1+ε)Δ or (1+ε)Δ²
  Partition partition;
  std::size_t super_round = 0;     ///< relay super-round length (G² only)
};

/// (1+ε)Δ coloring of G.
SplitColoring color_g_splitting(const Graph& g, double eps, const SimConfig& sim, const MultiPhaseConfig& cfg = {});
/// (1+ε)Δ² coloring of G² (a distance-2 coloring of G).
SplitColoring color_g2_splitting(const Graph& g, double eps, const SimConfig& sim, const MultiPhaseConfig& cfg = {});

// ---------------------------------------------------------------- export

/// node,part
void write_partition_csv(std::ostream& os, const Partition& p);
/// node,cluster,color
void write_decomposition_csv(std::ostream& os, const ClusterDecomposition& d);

}  // namespace d2

#include "d2color/splitting_impl.hpp"
