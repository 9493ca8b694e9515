#pragma once

#include <algorithm>
#include <boost/container/small_vector.hpp>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <mutex>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "d2color/graph.hpp"
#include "d2color/rng.hpp"

namespace d2 {

/// ⌈log₂ x⌉ with ceil_log2(0) = ceil_log2(1) = 0.
constexpr unsigned ceil_log2(std::uint64_t x) noexcept {
  unsigned bits = 0;
  while (bits < 64 && (std::uint64_t{1} << bits) < x) ++bits;
  return bits;
}

/// Bits needed to write any value in [0, count); at least one.
constexpr unsigned width_for(std::uint64_t count) noexcept {
  const unsigned w = ceil_log2(count);
  return w == 0 ? 1 : w;
}

struct BitWidths {
  unsigned id = 1;     ///< ⌈log₂ n⌉
  unsigned color = 1;  ///< ⌈log₂(Δ²+1)⌉

  static BitWidths for_graph(std::size_t n, std::size_t delta) {
    return {width_for(n), width_for(static_cast<std::uint64_t>(delta) * delta + 1)};
  }
};

enum class FieldKind : std::uint8_t { id, color, raw };

struct Field {
  std::uint64_t value = 0;
  FieldKind kind = FieldKind::raw;
  std::uint8_t width = 0;  ///< only meaningful for raw fields
};

/// Explicit routing path carried by a multi-hop message.
struct Route {
  boost::container::small_vector<NodeId, 4> ahead;  ///< hops still to traverse
  boost::container::small_vector<NodeId, 5> trail;  ///< nodes already visited, origin first
  bool empty() const { return ahead.empty() && trail.empty(); }
};

/// A typed payload. Senders never state its size; the kernel measures it.
struct Message {
  std::uint16_t tag = 0;
  boost::container::small_vector<Field, 6> fields;
  Route route;

  Message() = default;
  explicit Message(std::uint16_t t) : tag(t) {}

  Message& id(NodeId v) {
    fields.push_back({v, FieldKind::id, 0});
    return *this;
  }
  Message& color(std::uint64_t c) {
    fields.push_back({c, FieldKind::color, 0});
    return *this;
  }
  Message& raw(std::uint64_t value, unsigned width) {
    fields.push_back({value, FieldKind::raw, static_cast<std::uint8_t>(width)});
    return *this;
  }
  Message& flag(bool b) { return raw(b ? 1 : 0, 1); }

  std::uint64_t operator[](std::size_t i) const { return fields[i].value; }
  std::size_t size() const { return fields.size(); }
};

/// Registered message kinds of one protocol. Tags cost ⌈log₂ #kinds⌉ bits.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {}

  std::size_t size() const noexcept { return names_.size(); }
  unsigned tag_bits() const noexcept { return ceil_log2(names_.size()); }
  const std::string& name(std::uint16_t tag) const { return names_.at(tag); }
  std::uint16_t tag(const std::string& name) const;
  bool registered(std::uint16_t tag) const noexcept { return tag < names_.size(); }

 private:
  std::vector<std::string> names_;
};

class UnregisteredMessage : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Canonical encoding length: tag bits + field bits (+ route ids with two
/// 3-bit length headers when the message is routed).
std::size_t measure(const Message& msg, const Vocabulary& vocab, const BitWidths& widths);

enum class Enforcement { strict, audit };

struct SimConfig {
  double beta = 32.0;            ///< B = ⌊β·⌈log₂ n⌉⌋ bits per edge, direction and round
  std::uint64_t seed = 1;
  std::size_t max_rounds = 2'000'000;
  Enforcement enforcement = Enforcement::audit;
  unsigned threads = 1;          ///< node steps of one round may run concurrently

  std::size_t bandwidth_bits(std::size_t n) const;
};

struct Violation {
  std::size_t round = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::size_t bits = 0;
};

class BandwidthViolation : public std::runtime_error {
 public:
  explicit BandwidthViolation(const Violation& v);
  Violation violation;
};

class RoundLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhaseSpan {
  std::string label;
  std::size_t first_round = 0;  ///< 1-based global round of the first round in the span
  std::size_t rounds = 0;
};

struct SimTrace {
  std::size_t rounds_used = 0;
  std::size_t bandwidth_bits = 0;
  std::vector<std::size_t> max_edge_bits;  ///< per round
  std::vector<std::size_t> live_count;     ///< per round; empty entries when the program has no notion
  std::vector<Violation> violations;       ///< first kMaxStoredViolations only
  std::size_t violation_count = 0;
  std::vector<PhaseSpan> phases;
  bool exhausted = false;
  std::uint64_t rng_draws = 0;

  static constexpr std::size_t kMaxStoredViolations = 1024;

  void append(const SimTrace& stage);
  std::size_t max_bits() const;
  /// Rounds summed per phase label, labels in first-seen order.
  std::vector<std::pair<std::string, std::size_t>> rounds_by_phase() const;
  std::size_t rounds_in(const std::string& label) const;
  /// round,max_edge_bits,live_count,phase_label
  std::string to_csv() const;
};

/// What a node knows locally in a round.
struct NodeContext {
  NodeId self = 0;
  std::span<const NodeId> neighbors;
  std::size_t round = 0;
  std::size_t n = 0;
  std::size_t delta = 0;
  std::size_t bandwidth = 0;
  const BitWidths* widths = nullptr;
  const Vocabulary* vocab = nullptr;

  std::size_t degree() const { return neighbors.size(); }
  std::ptrdiff_t port_of(NodeId u) const {
    const auto it = std::lower_bound(neighbors.begin(), neighbors.end(), u);
    return (it == neighbors.end() || *it != u) ? -1 : it - neighbors.begin();
  }
  bool is_neighbor(NodeId u) const { return port_of(u) >= 0; }
  std::size_t bits(const Message& m) const { return measure(m, *vocab, *widths); }
};

using Packet = std::vector<Message>;

/// Per-port outgoing buffer for one node and one round.
class Outbox {
 public:
  Outbox() = default;
  void reset(std::size_t ports, const NodeContext* ctx) {
    if (packets_.size() != ports) {
      packets_.assign(ports, {});
      bits_.assign(ports, 0);
    }
    for (std::size_t p : dirty_) {
      packets_[p].clear();
      bits_[p] = 0;
    }
    dirty_.clear();
    ctx_ = ctx;
    wake_ = 0;
  }

  /// A running node may skip rounds: it is not stepped again before
  /// `round` unless mail arrives. Skipped rounds still count.
  void sleep_until(std::size_t round) { wake_ = round; }
  std::size_t wake_round() const { return wake_; }

  void send(std::size_t port, Message msg) {
    if (packets_[port].empty()) dirty_.push_back(port);
    bits_[port] += ctx_->bits(msg);
    packets_[port].push_back(std::move(msg));
  }
  void broadcast(const Message& msg) {
    for (std::size_t p = 0; p < packets_.size(); ++p) send(p, msg);
  }
  std::size_t used_bits(std::size_t port) const { return bits_[port]; }
  std::size_t measure(const Message& m) const { return ctx_->bits(m); }
  std::size_t remaining_bits(std::size_t port) const {
    return bits_[port] >= ctx_->bandwidth ? 0 : ctx_->bandwidth - bits_[port];
  }
  bool empty() const { return dirty_.empty(); }
  std::span<const std::size_t> dirty_ports() const { return dirty_; }
  Packet& packet(std::size_t port) { return packets_[port]; }
  std::size_t ports() const { return packets_.size(); }

 private:
  std::vector<Packet> packets_;
  std::vector<std::size_t> bits_;
  std::vector<std::size_t> dirty_;
  const NodeContext* ctx_ = nullptr;
  std::size_t wake_ = 0;
};

using Inbox = std::span<const Packet>;

enum class Status { running, halted };

/// A per-node step function. `step` is called once at round 0 with an
/// empty inbox and then once per round while the node is running or has
/// mail. It may only touch its own state.
template <class P>
concept NodeProgram = requires(const P& p, typename P::State& s, const NodeContext& ctx, Inbox in,
                               Outbox& out, StreamRng& rng) {
  typename P::State;
  { p.vocabulary() } -> std::convertible_to<const Vocabulary&>;
  { p.step(ctx, s, in, out, rng) } -> std::same_as<Status>;
};

template <class P>
concept ReportsLiveness = requires(const P& p, const typename P::State& s) {
  { p.live(s) } -> std::convertible_to<bool>;
};

template <class P>
concept HasWidths = requires(const P& p) {
  { p.widths() } -> std::convertible_to<BitWidths>;
};

/// FIFO queues per port, drained as bandwidth allows. This is how the
/// protocols pipeline long item lists over a single edge.
class PortQueues {
 public:
  void resize(std::size_t ports) {
    if (queues_.size() != ports) queues_.assign(ports, {});
  }
  void push(std::size_t port, Message msg) {
    if (queues_[port].empty()) ++active_;
    queues_[port].push_back(std::move(msg));
  }
  void push_all(const Message& msg) {
    for (std::size_t p = 0; p < queues_.size(); ++p) push(p, msg);
  }
  bool empty() const { return active_ == 0; }
  std::size_t backlog(std::size_t port) const { return queues_[port].size(); }
  std::size_t ports() const { return queues_.size(); }

  /// Moves queued messages into the outbox while they fit the remaining
  /// budget of their port; a port always ships at least one message per
  /// round so oversized items still make progress (and show up in audits).
  void flush(Outbox& out) {
    if (active_ == 0) return;
    for (std::size_t p = 0; p < queues_.size(); ++p) {
      auto& q = queues_[p];
      if (q.empty()) continue;
      bool first = out.used_bits(p) == 0;
      while (!q.empty()) {
        if (!first && out.measure(q.front()) > out.remaining_bits(p)) break;
        out.send(p, std::move(q.front()));
        q.pop_front();
        first = false;
      }
      if (q.empty()) --active_;
    }
  }

 private:
  std::vector<std::deque<Message>> queues_;
  std::size_t active_ = 0;
};

class RouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Starts a routed message along `path` = [self, h1, ..., hk]. Each hop takes
/// one round; the receiver reads the reverse path from the trail.
void route_send(const NodeContext& ctx, Outbox& out, std::span<const NodeId> path, Message msg);
void route_send(const NodeContext& ctx, PortQueues& out, std::span<const NodeId> path, Message msg);

/// True when `msg` still has hops ahead of the current node.
inline bool route_in_transit(const Message& msg) { return !msg.route.ahead.empty(); }

/// Forwards a routed message one hop; throws RouteError when the next hop is
/// not an immediate neighbor.
void route_forward(const NodeContext& ctx, Outbox& out, Message msg);
void route_forward(const NodeContext& ctx, PortQueues& out, Message msg);

/// [self, ..., origin] for a message that has arrived.
std::vector<NodeId> reverse_path(const NodeContext& ctx, const Message& msg);

namespace detail {

void parallel_for(unsigned threads, std::size_t count, const auto& fn) {
  if (threads <= 1 || count < 2 * threads) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(count, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([lo, hi, &fn, &error, &error_mutex] {
        try {
          for (std::size_t i = lo; i < hi; ++i) fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

std::vector<std::vector<std::uint32_t>> reverse_ports(const Graph& g);

}  // namespace detail

struct RunOptions {
  std::string label = "run";
  std::uint64_t stream = 0;  ///< RNG stream salt; distinct per stage
};

/// Executes `program` on `g` until every node has halted and no message is
/// in flight, or until cfg.max_rounds rounds have been used.
template <NodeProgram P>
SimTrace run(const Graph& g, const P& program, std::vector<typename P::State>& states, const SimConfig& cfg,
             const RunOptions& opts = {}) {
  const std::size_t n = g.size();
  if (states.size() != n) throw std::invalid_argument("state vector size differs from node count");
  BitWidths widths = BitWidths::for_graph(n, g.max_degree());
  if constexpr (HasWidths<P>) widths = program.widths();
  const Vocabulary& vocab = program.vocabulary();
  const std::size_t bandwidth = cfg.bandwidth_bits(n);

  SimTrace trace;
  trace.bandwidth_bits = bandwidth;

  std::vector<NodeContext> ctx(n);
  for (NodeId v = 0; v < n; ++v) {
    ctx[v].self = v;
    ctx[v].neighbors = g.neighbors(v);
    ctx[v].n = n;
    ctx[v].delta = g.max_degree();
    ctx[v].bandwidth = bandwidth;
    ctx[v].widths = &widths;
    ctx[v].vocab = &vocab;
  }
  const auto rev = detail::reverse_ports(g);
  std::vector<Outbox> outbox(n);
  std::vector<std::vector<Packet>> inbox(n);
  std::vector<char> has_mail(n, 0);
  std::vector<char> halted(n, 0);
  std::vector<std::size_t> wake(n, 0);
  std::vector<std::uint64_t> draws(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    inbox[v].resize(g.degree(v));
    outbox[v].reset(g.degree(v), &ctx[v]);
  }

  auto step_node = [&](std::size_t i, std::size_t round) {
    const auto v = static_cast<NodeId>(i);
    if (!has_mail[v] && (halted[v] || wake[v] > round)) return;
    ctx[v].round = round;
    outbox[v].reset(g.degree(v), &ctx[v]);
    StreamRng rng(cfg.seed, opts.stream, v, round);
    const Status st = program.step(ctx[v], states[v], Inbox(inbox[v]), outbox[v], rng);
    halted[v] = st == Status::halted ? 1 : 0;
    wake[v] = outbox[v].wake_round();
    draws[v] += rng.draws();
    if (has_mail[v]) {
      for (auto& p : inbox[v]) p.clear();
      has_mail[v] = 0;
    }
  };

  auto count_live = [&]() -> std::size_t {
    if constexpr (ReportsLiveness<P>) {
      std::size_t live = 0;
      for (NodeId v = 0; v < n; ++v) live += program.live(states[v]) ? 1 : 0;
      return live;
    } else {
      return 0;
    }
  };

  detail::parallel_for(cfg.threads, n, [&](std::size_t i) { step_node(i, 0); });

  std::size_t round = 0;
  for (;;) {
    bool traffic = false;
    bool all_halted = true;
    std::size_t next_wake = static_cast<std::size_t>(-1);
    for (NodeId v = 0; v < n; ++v) {
      if (!outbox[v].empty()) traffic = true;
      if (!halted[v]) {
        all_halted = false;
        next_wake = std::min(next_wake, std::max(wake[v], round + 1));
      }
    }
    if (!traffic && all_halted) break;
    if (!traffic && next_wake > round + 1) {
      // Everyone is asleep: the skipped rounds carry no messages.
      const std::size_t target = std::min(next_wake - 1, cfg.max_rounds);
      if (target > round) {
        const std::size_t live = count_live();
        trace.max_edge_bits.resize(trace.max_edge_bits.size() + (target - round), 0);
        trace.live_count.resize(trace.live_count.size() + (target - round), live);
        round = target;
      }
    }
    if (round >= cfg.max_rounds) {
      trace.exhausted = true;
      break;
    }
    ++round;
    std::size_t max_bits = 0;
    for (NodeId v = 0; v < n; ++v) {
      auto& ob = outbox[v];
      if (ob.empty()) continue;
      const auto nb = g.neighbors(v);
      for (std::size_t port : ob.dirty_ports()) {
        const std::size_t bits = ob.used_bits(port);
        max_bits = std::max(max_bits, bits);
        const NodeId u = nb[port];
        if (bits > bandwidth) {
          const Violation viol{round, v, u, bits};
          if (cfg.enforcement == Enforcement::strict) throw BandwidthViolation(viol);
          if (trace.violations.size() < SimTrace::kMaxStoredViolations) trace.violations.push_back(viol);
          ++trace.violation_count;
        }
        auto& dst = inbox[u][rev[v][port]];
        auto& src = ob.packet(port);
        dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
        has_mail[u] = 1;
      }
      ob.reset(g.degree(v), &ctx[v]);
    }
    trace.max_edge_bits.push_back(max_bits);
    detail::parallel_for(cfg.threads, n, [&](std::size_t i) { step_node(i, round); });
    trace.live_count.push_back(count_live());
  }
  trace.rounds_used = round;
  for (auto d : draws) trace.rng_draws += d;
  trace.phases.push_back({opts.label, 1, round});
  return trace;
}

}  // namespace d2
