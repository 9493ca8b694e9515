#pragma once

// Template bodies for splitting.hpp.

#include "d2color/det_d2.hpp"

namespace d2 {

namespace detail {

// Distance-1 locally-iterative trials: a node keeps its try unless a
// neighbor tries or holds the same color.
struct LineTrials {
  struct State {
    std::uint64_t psi = 0;
    Color color = kLive;
    Color trying = kLive;
    std::uint64_t phase = 0;
    std::uint32_t blocked = 0;
    std::vector<Color> taken;  ///< colors of finished neighbors
  };
  Vocabulary vocab{{"try", "colored"}};
  std::uint64_t q = 2;
  unsigned width = 1;

  const Vocabulary& vocabulary() const { return vocab; }
  bool live(const State& s) const { return s.color < 0; }

  Color candidate(const State& s) const {
    return static_cast<Color>((s.psi / q + (s.psi % q) * (s.phase % q)) % q);
  }

  Status step(const NodeContext& ctx, State& s, Inbox in, Outbox& out, StreamRng&) const {
    if (s.color >= 0) return Status::halted;
    if (ctx.round == 0) {
      s.trying = candidate(s);
      if (ctx.degree() == 0) {
        s.color = s.trying;
        return Status::halted;
      }
      out.broadcast(Message(0).raw(static_cast<std::uint64_t>(s.trying), width));
      return Status::running;
    }
    bool clash = false;
    for (std::size_t p = 0; p < in.size(); ++p)
      for (const Message& m : in[p]) {
        const auto c = static_cast<Color>(m[0]);
        if (m.tag == 1) s.taken.push_back(c);
        if (m.tag == 0 && c == s.trying) clash = true;
      }
    if (!clash && std::find(s.taken.begin(), s.taken.end(), s.trying) == s.taken.end()) {
      s.color = s.trying;
      out.broadcast(Message(1).raw(static_cast<std::uint64_t>(s.color), width));
      return Status::halted;
    }
    ++s.blocked;
    ++s.phase;
    if (s.phase >= q) throw std::logic_error("line trials ran out of phases");
    s.trying = candidate(s);
    out.broadcast(Message(0).raw(static_cast<std::uint64_t>(s.trying), width));
    return Status::running;
  }
};

}  // namespace detail

template <class Net>
DirectColoring color_direct(const Net& net, std::size_t max_degree, const SimConfig& cfg) {
  DirectColoring r;
  const std::size_t n = net.size();
  const std::uint64_t D = max_degree;
  r.palette = D + 1;
  r.coloring.resize(n);
  for (std::size_t v = 0; v < n; ++v) r.coloring[v] = static_cast<Color>(v);
  std::uint64_t bound = n;
  if (bound <= r.palette) return r;  // ids already do

  if (!linial_schedule(bound, D).empty()) {
    auto st = linial_stage(net, r.coloring, bound, D, 1, cfg, "split_linial");
    r.trace.append(st.trace);
    r.coloring = std::move(st.coloring);
    bound = linial_schedule(bound, D).back().colors_out();
  }
  std::uint64_t q = next_prime(std::max<std::uint64_t>(4 * D, 2));
  while (q * q < bound) q = next_prime(q);
  r.q = q;
  if (q < bound) {
    detail::LineTrials prog;
    prog.q = q;
    prog.width = width_for(q);
    std::vector<detail::LineTrials::State> st(n);
    for (std::size_t v = 0; v < n; ++v) st[v].psi = static_cast<std::uint64_t>(r.coloring[v]);
    r.trace.append(net.run(prog, st, cfg, {"split_lines", 0x5117}));
    for (std::size_t v = 0; v < n; ++v) r.coloring[v] = st[v].color;
    bound = q;
  }
  if (bound > r.palette) {
    auto st = color_reduction(net, r.coloring, r.palette, bound - r.palette, 1, 1, cfg, "split_reduce");
    r.trace.append(st.trace);
    r.coloring = std::move(st.coloring);
  }
  return r;
}

}  // namespace d2
