#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "d2color/congest.hpp"
#include "d2color/protocol.hpp"
#include "d2color/types.hpp"

namespace d2 {

bool is_prime(std::uint64_t x);
/// Smallest prime strictly greater than x.
std::uint64_t next_prime(std::uint64_t x);
/// Smallest prime q with 4Δ² < q < 8Δ².
std::uint64_t find_prime(std::uint64_t delta);

/// One Linial iteration: colors in [0, colors_in) are read as degree-`degree`
/// polynomials over F_p; the new color is x·p + f(x) for the smallest x at
/// which f differs from every conflicting neighbor's polynomial.
struct LinialStep {
  std::uint64_t colors_in = 0;
  std::uint64_t p = 0;
  std::uint64_t degree = 0;
  std::uint64_t colors_out() const { return p * p; }
};

/// Iterations that strictly shrink the palette, given at most
/// `degree_bound` conflicting neighbors per node.
std::vector<LinialStep> linial_schedule(std::uint64_t colors, std::uint64_t degree_bound);

/// Final palette of the schedule is below kLinialConstant·D² where D is the
/// degree bound (for G², D = Δ², so < 16Δ⁴ < q²).
inline constexpr std::uint64_t kLinialConstant = 16;

std::uint64_t linial_recolor(std::uint64_t color, const std::vector<std::uint64_t>& conflicts, const LinialStep& step);

struct StageResult {
  Coloring coloring;
  SimTrace trace;
};

namespace detail {

// Every node learns the colors within `hops` hops (hops ∈ {1, 2}),
// recoloring first with the previous Linial step if one is given.
struct LinialGather {
  struct State {
    std::uint64_t color = 0;
    std::vector<std::uint64_t> seen;
    PortQueues queues;
  };
  Vocabulary vocab{{"own", "fwd"}};
  unsigned hops = 2;
  unsigned width = 1;
  const LinialStep* recolor = nullptr;

  const Vocabulary& vocabulary() const { return vocab; }
  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      if (recolor) s.color = linial_recolor(s.color, s.seen, *recolor);
      s.seen.clear();
      s.queues.resize(ctx.degree());
      out.broadcast(Message(0).raw(s.color, width));
      return Status::halted;
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        s.seen.push_back(m[0]);
        if (m.tag == 0 && hops == 2)
          for (std::size_t q = 0; q < ctx.degree(); ++q)
            if (q != p) s.queues.push(q, Message(1).raw(m[0], width));
      }
    }
    s.queues.flush(out);
    return s.queues.empty() ? Status::halted : Status::running;
  }
};

// Locally-iterative trials with p_v(i) = (⌊ψ/q⌋ + (ψ mod q)·i) mod q.
struct LocallyIterative {
  struct State {
    std::uint64_t psi = 0;
    Color color = kLive;
    Color trying = kLive;
    std::uint64_t phase = 0;
    std::uint32_t blocked = 0;
    NeighborColors nbr;
    std::vector<Color> tries;
    std::vector<char> conflict;
  };
  Vocabulary vocab{{"try", "reply", "colored"}};
  std::uint64_t q = 2;
  unsigned width = 1;

  const Vocabulary& vocabulary() const { return vocab; }
  bool live(const State& s) const { return s.color < 0; }

  Color candidate(const State& s) const {
    return static_cast<Color>((s.psi / q + (s.psi % q) * (s.phase % q)) % q);
  }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      s.nbr.resize(ctx.degree());
      if (ctx.degree() == 0) {
        s.color = candidate(s);
        return Status::halted;
      }
      s.trying = candidate(s);
      out.broadcast(Message(0).raw(static_cast<std::uint64_t>(s.trying), width));
      return Status::running;
    }
    bool any_try = false;
    bool replied = false;
    bool rejected = false;
    s.tries.assign(ctx.degree(), kLive);
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        if (m.tag == 2) s.nbr.set(p, static_cast<Color>(m[0]));
        if (m.tag == 0) {
          s.tries[p] = static_cast<Color>(m[0]);
          any_try = true;
        }
        if (m.tag == 1) {
          replied = true;
          rejected = rejected || m[0] != 0;
        }
      }
    }
    if (any_try) {
      evaluate_tries(s.tries, s.nbr, s.color, s.trying, s.conflict);
      for (std::size_t p = 0; p < s.tries.size(); ++p)
        if (s.tries[p] >= 0) out.send(p, Message(1).flag(s.conflict[p] != 0));
    }
    if (replied && s.trying >= 0) {
      if (!rejected) {
        s.color = s.trying;
        s.trying = kLive;
        out.broadcast(Message(2).raw(static_cast<std::uint64_t>(s.color), width));
      } else {
        ++s.blocked;
        ++s.phase;
        if (s.phase >= q) throw std::logic_error("locally-iterative stage ran out of phases");
        s.trying = candidate(s);
        out.broadcast(Message(0).raw(static_cast<std::uint64_t>(s.trying), width));
      }
    }
    return s.color >= 0 ? Status::halted : Status::running;
  }
};

struct Known {
  std::uint32_t id;
  std::uint32_t color;
  bool operator<(const Known& o) const { return id < o.id; }
};

// (c+k) → c color reduction; eligible nodes hold a color ≥ c that exceeds
// every color within `hops` hops.
struct ColorReduction {
  struct State {
    Color color = 0;
    std::vector<Known> known;  // sorted by id once the flood is over
    bool sorted = false;
    std::size_t higher = 0;  // known colors above our own
    PortQueues queues;
    std::size_t recolored_in_phase = 0;  // 1-based, 0 = never
  };
  Vocabulary vocab{{"info", "fwd", "upd", "updf"}};
  unsigned hops = 2;
  std::uint64_t c = 1;
  std::uint64_t k = 0;
  unsigned width = 1;
  std::size_t flood_rounds = 1;

  const Vocabulary& vocabulary() const { return vocab; }
  bool live(const State& s) const { return static_cast<std::uint64_t>(s.color) >= c; }

  // fresh = the color comes from an update rather than the initial flood
  void learn(State& s, NodeId id, std::uint32_t color, bool fresh) const {
    if (!s.sorted) {
      if (fresh) {
        for (auto& x : s.known)
          if (x.id == id) x.color = color;
      }
      s.known.push_back({id, color});
      return;
    }
    auto it = std::lower_bound(s.known.begin(), s.known.end(), Known{id, 0});
    if (it == s.known.end() || it->id != id) {
      it = s.known.insert(it, {id, color});
      if (static_cast<Color>(color) > s.color) ++s.higher;
      return;
    }
    if (!fresh) return;
    if (static_cast<Color>(it->color) > s.color) --s.higher;
    it->color = color;
    if (static_cast<Color>(color) > s.color) ++s.higher;
  }

  void finish_flood(State& s, NodeId self) const {
    // stable: for a repeated id the first entry wins, and updates rewrite all copies
    std::stable_sort(s.known.begin(), s.known.end());
    s.known.erase(std::unique(s.known.begin(), s.known.end(), [](const Known& a, const Known& b) { return a.id == b.id; }),
                  s.known.end());
    std::erase_if(s.known, [&](const Known& x) { return x.id == self; });
    s.sorted = true;
    s.higher = 0;
    for (const auto& x : s.known) s.higher += static_cast<Color>(x.color) > s.color ? 1 : 0;
  }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (ctx.round == 0) {
      s.queues.resize(ctx.degree());
      out.broadcast(Message(0).id(ctx.self).raw(static_cast<std::uint64_t>(s.color), width));
    }
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (const Message& m : in[p]) {
        const auto id = static_cast<NodeId>(m[0]);
        const auto color = static_cast<std::uint32_t>(m[1]);
        switch (m.tag) {
          case 0:
            learn(s, id, color, false);
            if (hops == 2)
              for (std::size_t q = 0; q < ctx.degree(); ++q)
                if (q != p) s.queues.push(q, Message(1).id(id).raw(color, width));
            break;
          case 1:
            if (id != ctx.self) learn(s, id, color, false);
            break;
          case 2:
            learn(s, id, color, true);
            if (hops == 2)
              for (std::size_t q = 0; q < ctx.degree(); ++q)
                if (q != p) out.send(q, Message(3).id(id).raw(color, width));
            break;
          case 3:
            if (id != ctx.self) learn(s, id, color, true);
            break;
        }
      }
    }
    s.queues.flush(out);
    if (ctx.round >= flood_rounds && !s.sorted) finish_flood(s, ctx.self);
    const bool high = static_cast<std::uint64_t>(s.color) >= c;
    if (ctx.round >= flood_rounds && high && (ctx.round - flood_rounds) % hops == 0) {
      const std::size_t phase = (ctx.round - flood_rounds) / hops + 1;
      if (phase > k) throw std::logic_error("color reduction needs more phases than allotted");
      if (s.higher == 0) {
        std::vector<char> used(c, 0);
        for (const auto& x : s.known)
          if (x.color < c) used[x.color] = 1;
        const auto free = std::find(used.begin(), used.end(), 0);
        if (free == used.end()) throw std::logic_error("no free color below c");
        s.color = free - used.begin();
        s.recolored_in_phase = phase;
        s.higher = 0;
        for (const auto& x : s.known) s.higher += static_cast<Color>(x.color) > s.color ? 1 : 0;
        out.broadcast(Message(2).id(ctx.self).raw(static_cast<std::uint64_t>(s.color), width));
      }
    }
    if (static_cast<std::uint64_t>(s.color) >= c) {
      if (ctx.round < flood_rounds)
        out.sleep_until(flood_rounds);
      else if (s.higher == 0)
        out.sleep_until(ctx.round + hops - (ctx.round - flood_rounds) % hops);
      else
        out.sleep_until(static_cast<std::size_t>(-1));  // an update wakes us
      return Status::running;
    }
    return s.queues.empty() ? Status::halted : Status::running;
  }
};

}  // namespace detail

/// Linial's set-system coloring run on the graph of nodes within `hops`
/// hops. `colors` must be proper there with values < colors_bound.
template <class Net>
StageResult linial_stage(const Net& net, const Coloring& colors, std::uint64_t colors_bound,
                         std::uint64_t degree_bound, unsigned hops, const SimConfig& cfg,
                         const std::string& label = "linial") {
  StageResult r;
  const auto schedule = linial_schedule(colors_bound, degree_bound);
  std::vector<detail::LinialGather::State> st(net.size());
  for (std::size_t v = 0; v < st.size(); ++v) st[v].color = static_cast<std::uint64_t>(colors[v]);
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    detail::LinialGather prog;
    prog.hops = hops;
    prog.recolor = j > 0 ? &schedule[j - 1] : nullptr;
    prog.width = width_for(j > 0 ? schedule[j - 1].colors_out() : colors_bound);
    r.trace.append(net.run(prog, st, cfg, {label, 0x11a1 + j}));
  }
  r.coloring.resize(st.size());
  for (std::size_t v = 0; v < st.size(); ++v) {
    std::uint64_t c = st[v].color;
    if (!schedule.empty()) c = linial_recolor(c, st[v].seen, schedule.back());
    r.coloring[v] = static_cast<Color>(c);
  }
  return r;
}

/// Rounds after which a 2-hop flood of (id, color) pairs has drained.
std::size_t flood_rounds(std::size_t n, std::size_t max_degree, std::uint64_t color_bound, const SimConfig& cfg);

/// (c+k)-coloring → c-coloring within `hops` hops; needs c > the number of
/// nodes within `hops` hops of any node.
template <class Net>
StageResult color_reduction(const Net& net, const Coloring& colors, std::uint64_t c, std::uint64_t k, unsigned hops,
                            std::size_t flood, const SimConfig& cfg, const std::string& label = "reduce_k") {
  std::uint64_t bound = c + k;
  for (Color x : colors) bound = std::max<std::uint64_t>(bound, static_cast<std::uint64_t>(x) + 1);
  detail::ColorReduction prog;
  prog.hops = hops;
  prog.c = c;
  prog.k = std::max<std::uint64_t>(k, bound - c);
  prog.width = width_for(bound);
  prog.flood_rounds = hops == 2 ? flood : 1;
  std::vector<detail::ColorReduction::State> st(net.size());
  for (std::size_t v = 0; v < st.size(); ++v) st[v].color = colors[v];
  StageResult r;
  r.trace = net.run(prog, st, cfg, {label, 0x7ed});
  r.coloring.resize(st.size());
  for (std::size_t v = 0; v < st.size(); ++v) r.coloring[v] = st[v].color;
  return r;
}

struct LocIterResult {
  Coloring coloring;
  SimTrace trace;
  std::vector<std::uint32_t> blocked;
  std::uint64_t q = 0;
};

/// Needs a proper d2-coloring with values < q².
LocIterResult locally_iterative(const Graph& g, const Coloring& psi, const SimConfig& cfg);

struct DetResult {
  Coloring coloring;
  SimTrace trace;
  std::uint64_t q = 0;
  std::uint64_t linial_colors = 0;  ///< palette bound after the Linial stage
  Coloring after_linial;
  Coloring after_loc_iter;
  std::vector<std::uint32_t> blocked;
  std::size_t max_blocked = 0;
  std::size_t square_degree = 0;  ///< Δ(G²)
};

/// Linial on G² → locally-iterative → color reduction to Δ(G²)+1 colors.
DetResult d2_color_det(const Graph& g, const SimConfig& cfg);

}  // namespace d2
