#include "d2color/rand_d2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "d2color/det_d2.hpp"

namespace d2 {

RandConfig RandConfig::paper() {
  RandConfig c;
  c.profile = Profile::paper;
  const double e = std::numbers::e;
  c.c1 = 1.0 / (402.0 * e * e * e);
  c.c0 = 3.0 * e / c.c1;
  c.c3 = 32.0;
  c.query_floor = 0.0;
  return c;
}

std::pair<Color, Color> block_range(std::size_t i, std::size_t delta, std::size_t z) {
  const auto d2 = static_cast<Color>(delta * delta);
  const Color size = d2 / static_cast<Color>(z);
  const Color first = static_cast<Color>(i) * size;
  return {first, i + 1 == z ? d2 + 1 : first + size};
}

std::size_t block_of(Color c, std::size_t delta, std::size_t z) {
  const std::size_t size = delta * delta / z;
  return std::min(static_cast<std::size_t>(c) / size, z - 1);
}

namespace {

constexpr std::size_t kPhaseRounds = 23;
constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();

std::uint64_t pair_key(std::uint64_t a, std::uint64_t b) { return (std::min(a, b) << 32) | std::max(a, b); }

std::size_t intersect_count(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  std::size_t i = 0, j = 0, k = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else ++k, ++i, ++j;
  }
  return k;
}

void erase_sorted(std::vector<Color>& v, Color c) {
  const auto it = std::lower_bound(v.begin(), v.end(), c);
  if (it != v.end() && *it == c) v.erase(it);
}

bool send_if_fits(Outbox& out, std::size_t port, Message msg) {
  if (out.used_bits(port) > 0 && out.measure(msg) > out.remaining_bits(port)) return false;
  out.send(port, std::move(msg));
  return true;
}

// Same item list to every port, as many per round as fit.
template <class Items, class Make>
bool stream_broadcast(Outbox& out, std::size_t& cursor, const Items& items, const Make& make) {
  if (out.ports() == 0) {
    cursor = items.size();
    return true;
  }
  while (cursor < items.size()) {
    Message m = make(items[cursor]);
    const std::size_t need = out.measure(m);
    bool fits = true;
    for (std::size_t p = 0; p < out.ports() && fits; ++p)
      fits = out.used_bits(p) == 0 || need <= out.remaining_bits(p);
    if (!fits) break;
    out.broadcast(m);
    ++cursor;
  }
  return cursor >= items.size();
}

struct Shared {
  std::size_t delta = 0;
  std::size_t log_n = 1;
  std::uint64_t palette = 1;
  bool exact = true;
  double sample_size = 0;  // c10·log n
  std::size_t min_set = 0;
  const std::function<std::uint8_t(NodeId, NodeId)>* oracle = nullptr;

  std::uint8_t classify(std::size_t common) const {
    const double c = static_cast<double>(common);
    if (exact) {
      const double d2 = static_cast<double>(delta * delta);
      return (3 * c >= 2 * d2 ? kH : 0) | (6 * c >= 5 * d2 ? kHhat : 0);
    }
    return (6 * c >= 5 * sample_size - 1e-9 ? kH : 0) | (12 * c >= 11 * sample_size - 1e-9 ? kHhat : 0);
  }

  std::uint8_t pair_flags(RandNode& s, std::span<const NodeId> nb, std::size_t pa, std::size_t pb) const {
    if (oracle) return (*oracle)(nb[pa], nb[pb]);
    const auto& a = s.port_sets[pa];
    const auto& b = s.port_sets[pb];
    if (a.size() < min_set || b.size() < min_set) return 0;
    const auto key = pair_key(pa, pb);
    if (auto it = s.pair_cache.find(key); it != s.pair_cache.end()) return it->second;
    const auto f = classify(intersect_count(a, b));
    s.pair_cache.emplace(key, f);
    return f;
  }

  std::uint8_t direct_flags(const RandNode& s, NodeId self, std::span<const NodeId> nb, std::size_t p) const {
    if (oracle) return (*oracle)(self, nb[p]);
    return s.direct.empty() ? 0 : s.direct[p];
  }
};

// ---------------------------------------------------------------- trials

struct Trials {
  using State = RandNode;
  Vocabulary vocab{{"try", "reply", "colored"}};
  std::size_t iterations = 1;
  std::uint64_t palette = 1;

  const Vocabulary& vocabulary() const { return vocab; }
  bool live(const State& s) const { return s.color < 0; }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng& rng) const {
    const std::size_t r = ctx.round;
    const std::size_t end = 2 * iterations + 1;
    if (r == 0) {
      s.nbr.resize(ctx.degree());
      s.trying = kLive;
      s.rejected = false;
    }
    bool any_try = false;
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        if (m.tag == 0) {
          if (!any_try) s.tries.assign(ctx.degree(), kLive);
          any_try = true;
          s.tries[p] = static_cast<Color>(m[0]);
        } else if (m.tag == 1) {
          s.rejected = s.rejected || m[0] != 0;
        } else {
          s.nbr.set(p, static_cast<Color>(m[0]));
        }
      }
    }
    if (any_try) {
      evaluate_tries(s.tries, s.nbr, s.color, s.trying, s.conflict);
      for (std::size_t p = 0; p < s.tries.size(); ++p)
        if (s.tries[p] >= 0) out.send(p, Message(1).flag(s.conflict[p] != 0));
    }
    if (r % 2 == 0) {
      if (s.trying >= 0) {
        if (!s.rejected) {
          s.color = s.trying;
          out.broadcast(Message(2).color(static_cast<std::uint64_t>(s.color)));
        }
        s.trying = kLive;
        s.rejected = false;
      }
      if (s.color < 0 && r < 2 * iterations) {
        s.trying = static_cast<Color>(rng.below(palette));
        out.broadcast(Message(0).color(static_cast<std::uint64_t>(s.trying)));
      }
    }
    if (r >= end) return Status::halted;
    out.sleep_until(s.color < 0 ? r + (r % 2 == 0 ? 2 : 1) : end);
    return Status::running;
  }
};

// ------------------------------------------------------------ similarity

// N²(v) from the neighbor lists (exact) or S_v by 2-hop flooding (sampled).
struct SimGather {
  using State = RandNode;
  Vocabulary vocab{{"nbr", "mem", "fwd"}};
  const Shared* sh = nullptr;
  double membership = 0;

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng& rng) const {
    const auto nb = ctx.neighbors;
    if (ctx.round == 0) {
      s.own_set.clear();
      s.port_sets.assign(ctx.degree(), {});
      s.direct.assign(ctx.degree(), 0);
      s.pair_cache.clear();
      s.has_h = false;
      s.queues.resize(ctx.degree());
      s.stream_cursor = 0;
      if (sh->exact) s.own_set.assign(nb.begin(), nb.end());
      else if (rng.bernoulli(membership)) out.broadcast(Message(1).id(ctx.self));
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        const auto id = static_cast<NodeId>(m[0]);
        if (m.tag == 1) {
          s.own_set.push_back(id);
          for (std::size_t q = 0; q < ctx.degree(); ++q)
            if (q != p) s.queues.push(q, Message(2).id(id));
        } else if (id != ctx.self) {
          s.own_set.push_back(id);
        }
      }
    }
    bool done = true;
    if (sh->exact) done = stream_broadcast(out, s.stream_cursor, nb, [](NodeId u) { return Message(0).id(u); });
    s.queues.flush(out);
    return done && s.queues.empty() ? Status::halted : Status::running;
  }
};

struct SimShare {
  using State = RandNode;
  Vocabulary vocab{{"item"}};

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      std::sort(s.own_set.begin(), s.own_set.end());
      s.own_set.erase(std::unique(s.own_set.begin(), s.own_set.end()), s.own_set.end());
      std::erase(s.own_set, ctx.self);
      s.stream_cursor = 0;
    }
    for (std::size_t p = 0; p < in.size(); ++p)
      for (const Message& m : in[p]) s.port_sets[p].push_back(static_cast<NodeId>(m[0]));
    const bool done =
        stream_broadcast(out, s.stream_cursor, s.own_set, [](NodeId u) { return Message(0).id(u); });
    return done ? Status::halted : Status::running;
  }
};

// Middles tell each neighbor whether it has an H-neighbor through them.
struct SimAnnounce {
  using State = RandNode;
  Vocabulary vocab{{"has"}};
  const Shared* sh = nullptr;

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    const auto nb = ctx.neighbors;
    if (ctx.round == 0) {
      s.has_h = false;
      if (!sh->oracle) {
        s.direct.assign(ctx.degree(), 0);
        for (std::size_t p = 0; p < ctx.degree(); ++p)
          if (s.own_set.size() >= sh->min_set && s.port_sets[p].size() >= sh->min_set)
            s.direct[p] = sh->classify(intersect_count(s.own_set, s.port_sets[p]));
      }
      for (std::size_t p = 0; p < ctx.degree(); ++p) {
        if (sh->direct_flags(s, ctx.self, nb, p) & kH) s.has_h = true;
        for (std::size_t q = 0; q < ctx.degree(); ++q) {
          if (q != p && (sh->pair_flags(s, nb, p, q) & kH)) {
            out.send(p, Message(0).flag(true));
            break;
          }
        }
      }
    }
    for (std::size_t p = 0; p < in.size(); ++p)
      if (!in[p].empty()) s.has_h = true;
    return Status::halted;
  }
};

// --------------------------------------------------------------- sampler

struct Sampler {
  using State = RandNode;
  Vocabulary vocab{{"str", "fwd"}};
  const Shared* sh = nullptr;
  std::size_t count = 1;
  unsigned bits = 4;
  unsigned prefix = 0;

  const Vocabulary& vocabulary() const { return vocab; }
  std::uint64_t head(std::uint64_t x) const { return prefix == 0 ? 0 : x >> (bits - prefix); }

  static void offer(State& s, std::size_t k, std::uint64_t x, const HPath& path) {
    if (x < s.sample_best[k] || (x == s.sample_best[k] && path.len < s.sample_path[k].len)) {
      s.sample_best[k] = x;
      s.sample_path[k] = path;
    }
  }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng& rng) const {
    const auto nb = ctx.neighbors;
    const std::size_t r = ctx.round;
    if (r == 0) {
      s.queues.resize(ctx.degree());
      s.sample_b.assign(count, 0);
      s.sample_best.assign(count, kNone);
      s.sample_path.assign(count, HPath{});
    }
    struct Heard {
      std::uint64_t head;
      std::size_t port;
      std::uint64_t r;
    };
    std::vector<Heard> heard;
    std::vector<std::pair<std::size_t, std::uint64_t>> askers;
    const unsigned kbits = width_for(count);
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        if (m.tag == 0) {
          heard.push_back({head(m[0]), p, m[0]});
          if (m[1]) askers.emplace_back(p, m[2]);
        } else {
          const std::size_t k = m[0];
          offer(s, k, m[2] ^ s.sample_b[k], HPath{{ctx.self, nb[p], static_cast<NodeId>(m[1])}, 3});
        }
      }
    }
    if (!heard.empty()) {
      const std::size_t k = r - 1;
      if (s.sample_want[k]) {
        const auto mine = head(s.sample_b[k]);
        for (const auto& h : heard)
          if (h.head == mine && (sh->direct_flags(s, ctx.self, nb, h.port) & kH))
            offer(s, k, h.r ^ s.sample_b[k], HPath{{ctx.self, nb[h.port], 0}, 2});
      }
      if (!askers.empty()) {
        std::sort(heard.begin(), heard.end(), [](const Heard& a, const Heard& b) { return a.head < b.head; });
        for (const auto& [p, b] : askers) {
          const auto want = head(b);
          auto it = std::lower_bound(heard.begin(), heard.end(), want,
                                     [](const Heard& h, std::uint64_t x) { return h.head < x; });
          for (; it != heard.end() && it->head == want; ++it) {
            if (it->port == p || !(sh->pair_flags(s, nb, p, it->port) & kH)) continue;
            s.queues.push(p, Message(1).raw(k, kbits).id(nb[it->port]).raw(it->r, bits));
          }
        }
      }
    }
    if (r < count) {
      Message m(0);
      m.raw(rng.bits(bits), bits).flag(s.sample_want[r] != 0);
      if (s.sample_want[r]) {
        s.sample_b[r] = rng.bits(bits);
        m.raw(s.sample_b[r], bits);
      }
      out.broadcast(m);
    }
    s.queues.flush(out);
    return r + 1 < count || !s.queues.empty() ? Status::running : Status::halted;
  }
};

// ---------------------------------------------------------- reduce phase

enum ReduceTag : std::uint16_t {
  kQ1, kQ2, kChk2, kNbr2, kAck, kAckV, kCheckColor, kUsed, kProp, kPropV,
  kQ4, kChk5, kNbr5, kProp5, kTry, kReply, kColored
};

struct ReducePhase {
  using State = RandNode;
  Vocabulary vocab{{"q1", "q2", "chk2", "nbr2", "ack", "ackv", "cc", "used", "prop", "propv", "q4", "chk5", "nbr5",
                    "prop5", "try", "reply", "colored"}};
  const Shared* sh = nullptr;
  std::size_t rho = 1;
  double p_query = 0;
  double p_active = 0;
  unsigned prio_bits = 8;

  const Vocabulary& vocabulary() const { return vocab; }
  bool live(const State& s) const { return s.color < 0; }

  static void reset(State& s) {
    s.active = false;
    s.q1_port = -1;
    s.u_role = false;
    s.u_direct_pending = false;
    s.w_role = false;
    s.w_d2 = false;
    s.acked = false;
    s.proposals.clear();
    s.trying = kLive;
    s.rejected = false;
  }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng& rng) const {
    const std::size_t r = ctx.round;
    const std::size_t end = kPhaseRounds * rho;
    const auto nb = ctx.neighbors;
    if (r == 0) s.nbr.resize(ctx.degree());
    if (r % kPhaseRounds == 0) reset(s);
    const std::size_t j = r / kPhaseRounds;
    const std::size_t st = r % kPhaseRounds;

    std::ptrdiff_t q2_port = -1;
    std::uint64_t q2_prio = 0;
    NodeId q2_v = 0;
    const Message* q4_best = nullptr;
    std::vector<std::pair<std::size_t, const Message*>> q4_transit;
    bool any_try = false;
    bool relay_ack = false;

    auto better = [&](std::uint64_t pa, NodeId va, std::uint64_t pb, NodeId vb) {
      return pa > pb || (pa == pb && va > vb);
    };

    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        switch (m.tag) {
          case kQ1:
            if (s.q1_port < 0 || better(m[0], nb[p], s.q1_prio, nb[s.q1_port])) {
              if (s.q1_port >= 0) ++s.queries_dropped;
              s.q1_port = static_cast<std::ptrdiff_t>(p);
              s.q1_prio = m[0];
            } else {
              ++s.queries_dropped;
            }
            break;
          case kQ2:
            if (q2_port < 0 || better(m[1], static_cast<NodeId>(m[0]), q2_prio, q2_v)) {
              if (q2_port >= 0) ++s.queries_dropped;
              q2_port = static_cast<std::ptrdiff_t>(p);
              q2_prio = m[1];
              q2_v = static_cast<NodeId>(m[0]);
            } else {
              ++s.queries_dropped;
            }
            break;
          case kChk2:
            out.send(p, Message(kNbr2).flag(ctx.is_neighbor(static_cast<NodeId>(m[0]))));
            break;
          case kNbr2:
            if (s.u_role && m[0]) ++s.u_paths;
            break;
          case kAck:
            relay_ack = true;
            break;
          case kAckV:
            s.acked = true;
            break;
          case kCheckColor: {
            const auto c = static_cast<Color>(m[0]);
            bool used = s.color == c && (sh->direct_flags(s, ctx.self, nb, p) & kH);
            for (std::size_t q = 0; q < ctx.degree() && !used; ++q)
              used = q != p && s.nbr[q] == c && (sh->pair_flags(s, nb, p, q) & kH);
            out.send(p, Message(kUsed).flag(used));
            break;
          }
          case kUsed:
            if (m[0]) s.u_used = true;
            break;
          case kProp:
            if (s.q1_port >= 0) send_if_fits(out, static_cast<std::size_t>(s.q1_port), Message(kPropV).color(m[1]));
            break;
          case kPropV:
            s.proposals.push_back(static_cast<Color>(m[0]));
            ++s.proposals_received;
            break;
          case kQ4:
            if (route_in_transit(m)) {
              const auto port = static_cast<std::size_t>(ctx.port_of(m.route.ahead.front()));
              auto it = std::find_if(q4_transit.begin(), q4_transit.end(),
                                     [&](const auto& x) { return x.first == port; });
              if (it == q4_transit.end()) {
                q4_transit.emplace_back(port, &m);
              } else {
                ++s.queries_dropped;
                if (better(m[2], static_cast<NodeId>(m[0]), (*it->second)[2], static_cast<NodeId>((*it->second)[0])))
                  it->second = &m;
              }
            } else {
              if (q4_best) ++s.queries_dropped;
              if (!q4_best || better(m[2], static_cast<NodeId>(m[0]), (*q4_best)[2], static_cast<NodeId>((*q4_best)[0])))
                q4_best = &m;
            }
            break;
          case kChk5: {
            const auto v = static_cast<NodeId>(m[0]);
            out.send(p, Message(kNbr5).flag(v == ctx.self || ctx.is_neighbor(v)));
            break;
          }
          case kNbr5:
            if (m[0]) s.w_d2 = true;
            break;
          case kProp5:
            if (route_in_transit(m)) {
              const auto port = ctx.port_of(m.route.ahead.front());
              Message fwd = m;
              if (port >= 0 && out.used_bits(static_cast<std::size_t>(port)) > 0 &&
                  out.measure(fwd) + ctx.widths->id > out.remaining_bits(static_cast<std::size_t>(port)))
                break;  // no room on that edge this round
              route_forward(ctx, out, std::move(fwd));
            } else {
              s.proposals.push_back(static_cast<Color>(m[0]));
              ++s.proposals_received;
            }
            break;
          case kTry:
            if (!any_try) s.tries.assign(ctx.degree(), kLive);
            any_try = true;
            s.tries[p] = static_cast<Color>(m[0]);
            break;
          case kReply:
            if (m[0]) s.rejected = true;
            break;
          case kColored:
            s.nbr.set(p, static_cast<Color>(m[0]));
            break;
        }
      }
    }
    if (relay_ack && s.q1_port >= 0) out.send(static_cast<std::size_t>(s.q1_port), Message(kAckV));
    for (const auto& [port, msg] : q4_transit) route_forward(ctx, out, *msg);
    if (any_try) {
      evaluate_tries(s.tries, s.nbr, s.color, s.trying, s.conflict);
      for (std::size_t p = 0; p < s.tries.size(); ++p)
        if (s.tries[p] >= 0) out.send(p, Message(kReply).flag(s.conflict[p] != 0));
    }

    if (r >= end) return Status::halted;
    switch (st) {
      case 0:
        if (s.color < 0) {
          ++s.live_phases;
          s.active = rng.bernoulli(p_active);
          if (s.active) {
            ++s.activations;
            out.broadcast(Message(kQ1).raw(rng.bits(prio_bits), prio_bits));
          }
        }
        break;
      case 1:
        if (s.q1_port >= 0) {
          const auto vp = static_cast<std::size_t>(s.q1_port);
          for (std::size_t q = 0; q < ctx.degree(); ++q) {
            if (q == vp || !(sh->pair_flags(s, nb, vp, q) & kHhat) || !rng.bernoulli(p_query)) continue;
            out.send(q, Message(kQ2).id(nb[vp]).raw(s.q1_prio, prio_bits));
            ++s.queries_sent;
          }
        }
        break;
      case 2:
        if (q2_port >= 0) {
          s.u_role = true;
          s.u_v = q2_v;
          s.u_via = nb[static_cast<std::size_t>(q2_port)];
          s.u_prio = q2_prio;
          s.u_paths = 0;
          s.u_used = false;
          out.broadcast(Message(kChk2).id(q2_v));
        }
        break;
      case 4:
        if (s.u_role) {
          if (s.u_paths != 1) {
            s.u_role = false;
            ++s.queries_dropped;
          } else {
            out.send(static_cast<std::size_t>(ctx.port_of(s.u_via)), Message(kAck).id(s.u_v));
          }
        }
        break;
      case 6:
        if (s.u_role) {
          if (s.color >= 0) {
            const auto x = static_cast<Color>(rng.below(sh->palette - 1));
            s.u_hat = x >= s.color ? x + 1 : x;
          } else {
            s.u_hat = static_cast<Color>(rng.below(sh->palette));
          }
          s.u_used = false;
          out.broadcast(Message(kCheckColor).color(static_cast<std::uint64_t>(s.u_hat)));
        }
        break;
      case 8:
        if (s.u_role && !s.u_used) {
          out.send(static_cast<std::size_t>(ctx.port_of(s.u_via)),
                   Message(kProp).id(s.u_v).color(static_cast<std::uint64_t>(s.u_hat)));
          ++s.proposals_sent;
        }
        break;
      case 10:
        if (s.u_role) {
          s.u_role = false;
          if (j < s.samples.size() && s.samples[j].len >= 2) {
            if (s.samples[j].len == 2) s.u_direct_pending = true;
            else route_send(ctx, out, s.samples[j].view(), Message(kQ4).id(s.u_v).id(s.u_via).raw(s.u_prio, prio_bits));
          }
        }
        break;
      case 11:
        if (s.u_direct_pending) {
          s.u_direct_pending = false;
          route_send(ctx, out, s.samples[j].view(), Message(kQ4).id(s.u_v).id(s.u_via).raw(s.u_prio, prio_bits));
        }
        break;
      case 12:
        if (q4_best) {
          const auto v = static_cast<NodeId>((*q4_best)[0]);
          if (v != ctx.self) {
            s.w_role = true;
            s.w_back = reverse_path(ctx, *q4_best);
            s.w_back.push_back(static_cast<NodeId>((*q4_best)[1]));
            s.w_back.push_back(v);
            s.w_d2 = ctx.is_neighbor(v);
            out.broadcast(Message(kChk5).id(v));
          }
        }
        break;
      case 14:
        if (s.w_role) {
          s.w_role = false;
          if (!s.w_d2 && s.color >= 0) {
            route_send(ctx, out, s.w_back, Message(kProp5).color(static_cast<std::uint64_t>(s.color)));
            ++s.proposals_sent;
            ++s.own_color_proposals;
          }
        }
        break;
      case 18:
        if (s.active && s.color < 0 && !s.proposals.empty()) {
          s.trying = s.proposals[rng.below(s.proposals.size())];
          s.rejected = false;
          out.broadcast(Message(kTry).color(static_cast<std::uint64_t>(s.trying)));
        }
        break;
      case 20:
        if (s.trying >= 0) {
          if (!s.rejected) {
            s.color = s.trying;
            out.broadcast(Message(kColored).color(static_cast<std::uint64_t>(s.color)));
          }
          s.trying = kLive;
        }
        break;
      default:
        break;
    }

    if (r >= end) return Status::halted;
    const bool busy = s.active || s.u_role || s.u_direct_pending || s.w_role || s.trying >= 0;
    if (!busy) out.sleep_until(s.color < 0 ? kPhaseRounds * (j + 1) : end);
    return Status::running;
  }
};

// ----------------------------------------------------------- LearnPalette

// Δ = O(log n): every neighbor forwards the colors around it.
struct PaletteFlood {
  using State = RandNode;
  Vocabulary vocab{{"col"}};

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      s.queues.resize(ctx.degree());
      s.palette_removed.clear();
      for (std::size_t p = 0; p < ctx.degree(); ++p) {
        if (s.nbr[p] >= 0) {
          if (s.color < 0) s.palette_removed.push_back(s.nbr[p]);
          continue;
        }
        for (std::size_t q = 0; q < ctx.degree(); ++q)
          if (q != p && s.nbr[q] >= 0) s.queues.push(p, Message(0).color(static_cast<std::uint64_t>(s.nbr[q])));
      }
    }
    for (std::size_t p = 0; p < in.size(); ++p)
      for (const Message& m : in[p]) s.palette_removed.push_back(static_cast<Color>(m[0]));
    s.queues.flush(out);
    return s.queues.empty() ? Status::halted : Status::running;
  }
};

struct LiveDiscovery {
  using State = RandNode;
  Vocabulary vocab{{"live", "fwd"}};

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      s.queues.resize(ctx.degree());
      s.live_d2.clear();
      if (s.color < 0) out.broadcast(Message(0).id(ctx.self));
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        const auto id = static_cast<NodeId>(m[0]);
        if (m.tag == 0)
          for (std::size_t q = 0; q < ctx.degree(); ++q)
            if (q != p) s.queues.push(q, Message(1).id(id));
        if (id != ctx.self) s.live_d2.push_back(id);
      }
    }
    s.queues.flush(out);
    if (!s.queues.empty()) return Status::running;
    std::sort(s.live_d2.begin(), s.live_d2.end());
    s.live_d2.erase(std::unique(s.live_d2.begin(), s.live_d2.end()), s.live_d2.end());
    return Status::halted;
  }
};

std::uint64_t block_key(NodeId v, std::uint64_t i) { return (static_cast<std::uint64_t>(v) << 32) | i; }

struct HandleBlocks {
  using State = RandNode;
  Vocabulary vocab{{"handle"}};
  unsigned block_bits = 1;

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      s.queues.resize(ctx.degree());
      s.handled.clear();
      s.informed.clear();
      s.relayed.clear();
      if (s.color < 0)
        for (std::size_t i = 0; i < s.handlers.size(); ++i)
          if (s.handlers[i].len >= 2) route_send(ctx, s.queues, s.handlers[i].view(), Message(0).raw(i, block_bits));
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        if (route_in_transit(m)) {
          route_forward(ctx, s.queues, m);
          continue;
        }
        RandNode::Handled h{m.route.trail.front(), static_cast<std::uint32_t>(m[0]), reverse_path(ctx, m), {}};
        s.informed[block_key(h.v, h.block)] = HPath{{ctx.self, 0, 0}, 1};
        s.handled.push_back(std::move(h));
      }
    }
    s.queues.flush(out);
    return s.queues.empty() ? Status::halted : Status::running;
  }
};

// Split `total` uniformly random picks over the ports (with replacement).
std::vector<std::uint32_t> spread(std::size_t total, std::size_t ports, std::ptrdiff_t skip, StreamRng& rng) {
  std::vector<std::uint32_t> counts(ports, 0);
  if (ports == 0) return counts;
  const bool avoid = skip >= 0 && ports > 1;
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t q = rng.below(avoid ? ports - 1 : ports);
    if (avoid && q >= static_cast<std::size_t>(skip)) ++q;
    ++counts[q];
  }
  return counts;
}

struct InformHandlers {
  using State = RandNode;
  Vocabulary vocab{{"mw", "inform"}};
  std::size_t informed = 1;  // P
  unsigned block_bits = 1;
  unsigned count_bits = 1;

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng& rng) const {
    const auto nb = ctx.neighbors;
    if (ctx.round == 0) {
      s.queues.resize(ctx.degree());
      for (const auto& h : s.handled) {
        const auto counts = spread(informed, ctx.degree(), -1, rng);
        for (std::size_t p = 0; p < counts.size(); ++p)
          if (counts[p] > 0)
            s.queues.push(p, Message(0).id(h.v).raw(h.block, block_bits).raw(counts[p], count_bits));
      }
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        const auto v = static_cast<NodeId>(m[0]);
        if (m.tag == 0) {
          const auto counts = spread(m[2], ctx.degree(), static_cast<std::ptrdiff_t>(p), rng);
          for (std::size_t q = 0; q < counts.size(); ++q)
            if (counts[q] > 0) s.queues.push(q, Message(1).id(v).raw(m[1], block_bits).id(nb[p]));
        } else {
          s.informed.try_emplace(block_key(v, m[1]), HPath{{ctx.self, nb[p], static_cast<NodeId>(m[2])}, 3});
        }
      }
    }
    s.queues.flush(out);
    return s.queues.empty() ? Status::halted : Status::running;
  }
};

struct ColorWalks {
  using State = RandNode;
  Vocabulary vocab{{"cw", "cx", "cz"}};
  std::size_t walks = 1;  // K
  std::size_t delta = 1;
  std::size_t blocks = 1;
  unsigned count_bits = 1;

  const Vocabulary& vocabulary() const { return vocab; }

  void record(State& s, NodeId v, Color c) const {
    const auto b = block_of(c, delta, blocks);
    for (auto& h : s.handled)
      if (h.v == v && h.block == b) h.seen.push_back(c);
  }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng& rng) const {
    if (ctx.round == 0) {
      s.queues.resize(ctx.degree());
      if (s.color >= 0) {
        for (NodeId v : s.live_d2) {
          const auto counts = spread(walks, ctx.degree(), -1, rng);
          for (std::size_t p = 0; p < counts.size(); ++p)
            if (counts[p] > 0)
              s.queues.push(p, Message(0).id(v).color(static_cast<std::uint64_t>(s.color)).raw(counts[p], count_bits));
        }
      }
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        const auto v = static_cast<NodeId>(m[0]);
        const auto c = static_cast<Color>(m[1]);
        if (m.tag == 0) {
          const auto counts = spread(m[2], ctx.degree(), static_cast<std::ptrdiff_t>(p), rng);
          for (std::size_t q = 0; q < counts.size(); ++q)
            for (std::uint32_t t = 0; t < counts[q]; ++t) s.queues.push(q, Message(1).id(v).color(m[1]));
        } else if (m.tag == 1) {
          const auto it = s.informed.find(block_key(v, block_of(c, delta, blocks)));
          if (it == s.informed.end()) continue;
          if (!s.relayed.try_emplace(pair_key(v, static_cast<std::uint64_t>(c)), 1).second) continue;
          if (it->second.len == 1) record(s, v, c);
          else route_send(ctx, s.queues, it->second.view(), Message(2).id(v).color(m[1]));
        } else if (route_in_transit(m)) {
          route_forward(ctx, s.queues, m);
        } else {
          record(s, v, c);
        }
      }
    }
    s.queues.flush(out);
    return s.queues.empty() ? Status::halted : Status::running;
  }
};

struct ReturnBlocks {
  using State = RandNode;
  Vocabulary vocab{{"missing"}};
  std::size_t delta = 1;
  std::size_t blocks = 1;

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      s.queues.resize(ctx.degree());
      s.palette.clear();
      if (s.color < 0) {
        for (std::size_t i = 0; i < blocks; ++i) {
          if (i < s.handlers.size() && s.handlers[i].len >= 2) continue;
          const auto [lo, hi] = block_range(i, delta, blocks);
          for (Color c = lo; c < hi; ++c) s.palette.push_back(c);
        }
      }
      for (auto& h : s.handled) {
        std::sort(h.seen.begin(), h.seen.end());
        const auto [lo, hi] = block_range(h.block, delta, blocks);
        for (Color c = lo; c < hi; ++c)
          if (!std::binary_search(h.seen.begin(), h.seen.end(), c))
            route_send(ctx, s.queues, h.back, Message(0).color(static_cast<std::uint64_t>(c)));
      }
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        if (route_in_transit(m)) route_forward(ctx, s.queues, m);
        else s.palette.push_back(static_cast<Color>(m[0]));
      }
    }
    s.queues.flush(out);
    return s.queues.empty() ? Status::halted : Status::running;
  }
};

// v streams T_v to its neighbors; they answer with the colors in use next to them.
struct CrossCheck {
  using State = RandNode;
  Vocabulary vocab{{"tv", "used"}};

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      s.queues.resize(ctx.degree());
      s.palette_removed.clear();
      s.stream_cursor = 0;
      std::sort(s.palette.begin(), s.palette.end());
      s.palette.erase(std::unique(s.palette.begin(), s.palette.end()), s.palette.end());
      if (s.color >= 0) s.palette.clear();
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        const auto c = static_cast<Color>(m[0]);
        if (m.tag == 0) {
          if (s.color == c || s.nbr.contains(c)) s.queues.push(p, Message(1).color(m[0]));
        } else {
          s.palette_removed.push_back(c);
        }
      }
    }
    // answers go first so the stream never starves them
    s.queues.flush(out);
    bool done = true;
    if (s.color < 0)
      done = stream_broadcast(out, s.stream_cursor, s.palette,
                              [](Color c) { return Message(0).color(static_cast<std::uint64_t>(c)); });
    return done && s.queues.empty() ? Status::halted : Status::running;
  }
};

// --------------------------------------------------------- FinishColoring

struct Finish {
  using State = RandNode;
  Vocabulary vocab{{"try", "reply", "colored", "notify", "busy"}};

  const Vocabulary& vocabulary() const { return vocab; }
  bool live(const State& s) const { return s.color < 0; }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng& rng) const {
    const std::size_t r = ctx.round;
    if (r == 0) {
      s.queues.resize(ctx.degree());
      s.trying = kLive;
      s.rejected = false;
      s.busy_round = static_cast<std::size_t>(-1);
    }
    bool any_try = false;
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        const auto c = static_cast<Color>(m[0]);
        switch (m.tag) {
          case 0:
            if (!any_try) s.tries.assign(ctx.degree(), kLive);
            any_try = true;
            s.tries[p] = c;
            break;
          case 1:
            if (m[0]) s.rejected = true;
            break;
          case 2:
            s.nbr.set(p, c);
            erase_sorted(s.palette, c);
            for (std::size_t q = 0; q < ctx.degree(); ++q)
              if (q != p && s.nbr[q] < 0) s.queues.push(q, Message(3).color(m[0]));
            break;
          case 3:
            erase_sorted(s.palette, c);
            break;
          case 4:
            s.busy_round = r;
            break;
        }
      }
    }
    if (any_try) {
      evaluate_tries(s.tries, s.nbr, s.color, s.trying, s.conflict);
      for (std::size_t p = 0; p < s.tries.size(); ++p)
        if (s.tries[p] >= 0) out.send(p, Message(1).flag(s.conflict[p] != 0));
    }
    s.queues.flush(out);
    if (r % 2 == 0) {
      if (s.trying >= 0) {
        if (!s.rejected) {
          s.color = s.trying;
          out.broadcast(Message(2).color(static_cast<std::uint64_t>(s.color)));
        }
        s.trying = kLive;
        s.rejected = false;
      }
      const bool waiting = s.busy_round != static_cast<std::size_t>(-1) && s.busy_round + 1 >= r;
      if (s.color < 0 && !waiting && rng.bernoulli(0.5)) {
        if (s.palette.empty()) throw std::logic_error("live node with an empty remaining palette");
        s.trying = s.palette[rng.below(s.palette.size())];
        out.broadcast(Message(0).color(static_cast<std::uint64_t>(s.trying)));
      }
    }
    if (!s.queues.empty())
      for (std::size_t p = 0; p < ctx.degree(); ++p) send_if_fits(out, p, Message(4));
    return s.color < 0 || !s.queues.empty() || s.trying >= 0 ? Status::running : Status::halted;
  }
};

std::string format_reduce_label(double phi, double tau) {
  std::ostringstream os;
  os << "reduce(" << phi << ',' << tau << ')';
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- RandRun

RandRun::RandRun(const Graph& g, const SimConfig& sim, const RandConfig& cfg)
    : g_(g), sim_(sim), cfg_(cfg), n_(g.size()), delta_(g.max_degree()), log_n_(width_for(g.size())),
      palette_(static_cast<std::uint64_t>(g.max_degree()) * g.max_degree() + 1), nodes_(g.size()) {
  for (NodeId v = 0; v < n_; ++v) nodes_[v].nbr.resize(g.degree(v));
}

Coloring RandRun::coloring() const {
  Coloring c(n_);
  for (NodeId v = 0; v < n_; ++v) c[v] = nodes_[v].color;
  return c;
}

std::size_t RandRun::live_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const RandNode& s) { return s.color < 0; }));
}

std::size_t RandRun::rho(double phi, double tau) const {
  const double r = cfg_.c3 * (phi / tau) * (phi / tau) * static_cast<double>(log_n_);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(r - 1e-9)));
}

double RandRun::query_probability(double phi) const {
  double p = 1.0 / (cfg_.query_scale * phi);
  if (cfg_.query_floor > 0 && delta_ > 0) p = std::max(p, cfg_.query_floor / static_cast<double>(delta_ * delta_));
  return std::min(1.0, p);
}

unsigned RandRun::prefix_bits() const {
  const long a = 2 * static_cast<long>(ceil_log2(delta_));
  const long b = static_cast<long>(std::ceil(cfg_.c11 * ceil_log2(ceil_log2(std::max<std::size_t>(n_, 2)))));
  return static_cast<unsigned>(std::max(0L, a - b));
}

bool RandRun::exact_similarity() const {
  return static_cast<double>(delta_ * delta_) < cfg_.c10 * static_cast<double>(log_n_);
}

std::uint8_t RandRun::classify(std::size_t common) const {
  Shared sh;
  sh.delta = delta_;
  sh.exact = exact_similarity();
  sh.sample_size = cfg_.c10 * static_cast<double>(log_n_);
  return sh.classify(common);
}

namespace {

Shared make_shared(const Graph& g, std::size_t log_n, const RandConfig& cfg, bool exact,
                   const std::function<std::uint8_t(NodeId, NodeId)>& oracle) {
  Shared sh;
  sh.delta = g.max_degree();
  sh.log_n = log_n;
  sh.palette = static_cast<std::uint64_t>(sh.delta) * sh.delta + 1;
  sh.exact = exact;
  sh.sample_size = cfg.c10 * static_cast<double>(log_n);
  const double need = exact ? 2.0 * static_cast<double>(sh.delta * sh.delta) / 3.0 : 5.0 * sh.sample_size / 6.0;
  sh.min_set = static_cast<std::size_t>(std::max(0.0, std::ceil(need - 1e-9)));
  sh.oracle = oracle ? &oracle : nullptr;
  return sh;
}

}  // namespace

SimTrace RandRun::run_stage(const auto& program, const std::string& label, std::uint64_t stream) {
  auto t = run(g_, program, nodes_, sim_, {label, mix_keys(stream, ++stage_)});
  trace_.append(t);
  return t;
}

void RandRun::assign(const Coloring& coloring) {
  for (NodeId v = 0; v < n_; ++v) {
    nodes_[v].color = coloring[v];
    const auto nb = g_.neighbors(v);
    for (std::size_t p = 0; p < nb.size(); ++p) nodes_[v].nbr.set(p, coloring[nb[p]]);
  }
}

void RandRun::initial_trials(std::size_t iterations) {
  if (iterations == 0) return;
  Trials prog;
  prog.iterations = iterations;
  prog.palette = palette_;
  run_stage(prog, "init_trials", 0x7a1);
}

void RandRun::build_similarity() {
  const Shared sh = make_shared(g_, log_n_, cfg_, exact_similarity(), oracle_);
  SimGather gather;
  gather.sh = &sh;
  gather.membership = std::min(1.0, cfg_.c10 * static_cast<double>(log_n_) / static_cast<double>(delta_ * delta_));
  run_stage(gather, "similarity", 0x5e1);
  run_stage(SimShare{}, "similarity", 0x5e2);
  announce_h();
}

void RandRun::announce_h() {
  const Shared sh = make_shared(g_, log_n_, cfg_, exact_similarity(), oracle_);
  SimAnnounce prog;
  prog.sh = &sh;
  run_stage(prog, "similarity", 0x5e3);
}

void RandRun::set_h_oracle(std::function<std::uint8_t(NodeId, NodeId)> oracle) {
  oracle_ = std::move(oracle);
  for (NodeId v = 0; v < n_; ++v) {
    nodes_[v].port_sets.resize(g_.degree(v));
    nodes_[v].direct.assign(g_.degree(v), 0);
  }
  announce_h();
}

std::uint8_t RandRun::flags_at(NodeId at, NodeId u, NodeId w) {
  const Shared sh = make_shared(g_, log_n_, cfg_, exact_similarity(), oracle_);
  const auto nb = g_.neighbors(at);
  if (at == u) {
    const auto p = g_.port_of(u, w);
    if (p < 0) throw std::invalid_argument("flags_at: not adjacent");
    return sh.direct_flags(nodes_[at], at, nb, static_cast<std::size_t>(p));
  }
  const auto pa = g_.port_of(at, u), pb = g_.port_of(at, w);
  if (pa < 0 || pb < 0) throw std::invalid_argument("flags_at: not a common neighbor");
  return sh.pair_flags(nodes_[at], nb, static_cast<std::size_t>(pa), static_cast<std::size_t>(pb));
}

std::size_t RandRun::sample_h_neighbors(std::size_t count, const std::vector<char>& participants, bool handlers) {
  std::size_t wanted = 0;
  for (NodeId v = 0; v < n_; ++v) {
    auto& s = nodes_[v];
    auto& target = handlers ? s.handlers : s.samples;
    const bool want = participants[v] && s.has_h;
    target.assign(want ? count : 0, HPath{});
    s.sample_want.assign(count, want ? 1 : 0);
    wanted += want ? count : 0;
  }
  if (count == 0 || wanted == 0) return 0;
  const Shared sh = make_shared(g_, log_n_, cfg_, exact_similarity(), oracle_);
  Sampler prog;
  prog.sh = &sh;
  prog.count = count;
  prog.bits = static_cast<unsigned>(std::min<std::size_t>(64, 4 * log_n_));
  prog.prefix = std::min(prefix_bits(), prog.bits);
  std::size_t redraws = 0;
  for (std::size_t attempt = 0;; ++attempt) {
    run_stage(prog, handlers ? std::string("learn_palette") : sample_label_, 0x5a3);
    std::size_t missing = 0;
    for (auto& s : nodes_) {
      auto& target = handlers ? s.handlers : s.samples;
      for (std::size_t k = 0; k < s.sample_want.size(); ++k) {
        if (!s.sample_want[k]) continue;
        if (s.sample_best[k] != kNone) {
          target[k] = s.sample_path[k];
          s.sample_want[k] = 0;
        } else {
          ++missing;
        }
      }
    }
    if (missing == 0 || attempt + 1 >= cfg_.max_redraws) break;
    redraws += missing;
  }
  return redraws;
}

ReduceStats RandRun::reduce(double phi, double tau) {
  ReduceStats st;
  st.phi = phi;
  st.tau = tau;
  st.rho = rho(phi, tau);
  st.live_before = live_count();
  const std::string label = format_reduce_label(phi, tau);
  std::vector<char> all(n_, 1);
  sample_label_ = label + ":sample";
  const std::size_t before = trace_.rounds_used;
  st.redraws = sample_h_neighbors(st.rho, all);
  st.sample_rounds = trace_.rounds_used - before;
  sample_label_ = "sample";
  for (auto& s : nodes_)
    s.live_phases = s.activations = s.queries_sent = s.queries_dropped = s.proposals_sent = s.own_color_proposals = 0;

  const Shared sh = make_shared(g_, log_n_, cfg_, exact_similarity(), oracle_);
  ReducePhase prog;
  prog.sh = &sh;
  prog.rho = st.rho;
  prog.p_query = query_probability(phi);
  prog.p_active = activation_probability(phi, tau);
  prog.prio_bits = static_cast<unsigned>(std::min<std::size_t>(64, 2 * log_n_));
  const auto t = run_stage(prog, label, 0x4ed);
  st.rounds = t.rounds_used;
  for (const auto& s : nodes_) {
    st.live_phases += s.live_phases;
    st.activations += s.activations;
    st.queries += s.queries_sent;
    st.dropped += s.queries_dropped;
    st.proposals += s.proposals_sent;
  }
  st.node_iterations = st.live_phases;
  st.live_after = live_count();
  return st;
}

PaletteReport RandRun::learn_palette() {
  PaletteReport rep;
  const std::size_t before = trace_.rounds_used;
  rep.flooding = delta_ <= log_n_;
  for (NodeId v = 0; v < n_; ++v)
    if (nodes_[v].color < 0) rep.live.push_back(v);

  if (rep.flooding) {
    run_stage(PaletteFlood{}, "learn_palette", 0x1f0);
    for (NodeId v : rep.live) {
      auto& s = nodes_[v];
      std::sort(s.palette_removed.begin(), s.palette_removed.end());
      s.palette.clear();
      for (Color c = 0; c < static_cast<Color>(palette_); ++c)
        if (!std::binary_search(s.palette_removed.begin(), s.palette_removed.end(), c)) s.palette.push_back(c);
    }
  } else {
    const std::size_t z = std::min<std::size_t>(cfg_.handlers.value_or(delta_), delta_ * delta_);
    const std::size_t p_inf = cfg_.informed.value_or(
        delta_ * static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(delta_ * log_n_)))));
    const auto k_walks = static_cast<std::size_t>(
        std::ceil(static_cast<double>(delta_ * delta_) / static_cast<double>(p_inf) * static_cast<double>(log_n_)));

    run_stage(LiveDiscovery{}, "learn_palette", 0x1f1);
    std::vector<char> live(n_, 0);
    for (NodeId v : rep.live) live[v] = 1;
    if (!rep.live.empty()) sample_h_neighbors(z, live, true);
    else
      for (auto& s : nodes_) s.handlers.clear();
    for (NodeId v : rep.live)
      for (std::size_t i = 0; i < z; ++i)
        if (i >= nodes_[v].handlers.size() || nodes_[v].handlers[i].len < 2) ++rep.missing_handlers;

    HandleBlocks handle;
    handle.block_bits = width_for(z);
    run_stage(handle, "learn_palette", 0x1f2);
    InformHandlers inform;
    inform.informed = p_inf;
    inform.block_bits = width_for(z);
    inform.count_bits = width_for(p_inf + 1);
    run_stage(inform, "learn_palette", 0x1f3);
    ColorWalks walks;
    walks.walks = k_walks;
    walks.delta = delta_;
    walks.blocks = z;
    walks.count_bits = width_for(k_walks + 1);
    run_stage(walks, "learn_palette", 0x1f4);
    ReturnBlocks ret;
    ret.delta = delta_;
    ret.blocks = z;
    run_stage(ret, "learn_palette", 0x1f5);
    run_stage(CrossCheck{}, "learn_palette", 0x1f6);
    for (NodeId v : rep.live) {
      auto& s = nodes_[v];
      std::sort(s.palette_removed.begin(), s.palette_removed.end());
      std::erase_if(s.palette, [&](Color c) {
        return std::binary_search(s.palette_removed.begin(), s.palette_removed.end(), c);
      });
    }
    for (auto& s : nodes_) {
      s.handled.clear();
      s.informed.clear();
      s.relayed.clear();
    }
  }
  for (auto& s : nodes_) s.palette_known = s.color < 0;
  rep.snapshot = coloring();
  for (NodeId v : rep.live) rep.palettes.push_back(nodes_[v].palette);
  rep.rounds = trace_.rounds_used - before;
  return rep;
}

std::size_t RandRun::finish_coloring() {
  if (live_count() == 0) return 0;
  return run_stage(Finish{}, "finish", 0xf1).rounds_used;
}

RandResult d2_color_rand(const Graph& g, const SimConfig& sim, const RandConfig& cfg) {
  RandResult res;
  const std::size_t delta = g.max_degree();
  const double log_n = width_for(g.size());
  if (delta == 0 || static_cast<double>(delta * delta) < cfg.c2 * log_n) {
    auto det = d2_color_det(g, sim);
    res.delegated = true;
    res.coloring = std::move(det.coloring);
    res.trace = std::move(det.trace);
    return res;
  }
  RandRun run(g, sim, cfg);
  run.initial_trials(static_cast<std::size_t>(std::ceil(cfg.c0 * log_n)));
  res.live_after_trials = run.live_count();
  run.build_similarity();
  for (double tau = cfg.c1 * static_cast<double>(delta * delta); tau > cfg.c2 * log_n; tau /= 2)
    res.reduces.push_back(run.reduce(2 * tau, tau));
  res.palette = run.learn_palette();
  res.finish_rounds = run.finish_coloring();
  // FinishColoring only stops once every node is colored; the loop is a guard.
  for (int extra = 0; run.live_count() > 0 && extra < 8; ++extra) {
    run.learn_palette();
    res.finish_rounds += run.finish_coloring();
  }
  res.coloring = run.coloring();
  res.trace = run.trace();
  return res;
}

}  // namespace d2
