#include "d2color/det_d2.hpp"

#include <cmath>

namespace d2 {

bool is_prime(std::uint64_t x) {
  if (x < 2) return false;
  for (std::uint64_t d = 2; d * d <= x; ++d)
    if (x % d == 0) return false;
  return true;
}

std::uint64_t next_prime(std::uint64_t x) {
  std::uint64_t p = x + 1;
  while (!is_prime(p)) ++p;
  return p;
}

std::uint64_t find_prime(std::uint64_t delta) {
  if (delta == 0) throw std::invalid_argument("find_prime needs Δ ≥ 1");
  const std::uint64_t q = next_prime(4 * delta * delta);
  if (q >= 8 * delta * delta) throw std::logic_error("no prime in (4Δ², 8Δ²)");
  return q;
}

namespace {

// p^e ≥ m, without overflow
bool power_reaches(std::uint64_t p, std::uint64_t e, std::uint64_t m) {
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 0; i < e; ++i) {
    acc *= p;
    if (acc >= m) return true;
  }
  return acc >= m;
}

std::uint64_t ceil_root(std::uint64_t m, std::uint64_t e) {
  if (m <= 1) return 1;
  auto r = static_cast<std::uint64_t>(std::pow(static_cast<double>(m), 1.0 / static_cast<double>(e)));
  r = std::max<std::uint64_t>(r, 2) - 1;
  while (!power_reaches(r, e, m)) ++r;
  return r;
}

std::uint64_t poly_eval(std::uint64_t color, const LinialStep& st, std::uint64_t x) {
  // digits base p, least significant = constant term
  std::uint64_t coef[64];
  std::uint64_t k = 0;
  for (std::uint64_t i = 0; i <= st.degree; ++i) {
    coef[k++] = color % st.p;
    color /= st.p;
  }
  unsigned __int128 acc = 0;
  for (std::uint64_t i = k; i-- > 0;) acc = (acc * x + coef[i]) % st.p;
  return static_cast<std::uint64_t>(acc);
}

}  // namespace

std::vector<LinialStep> linial_schedule(std::uint64_t colors, std::uint64_t degree_bound) {
  std::vector<LinialStep> out;
  std::uint64_t m = colors;
  const std::uint64_t D = std::max<std::uint64_t>(degree_bound, 1);
  for (;;) {
    LinialStep best;
    for (std::uint64_t d = 1; d < 48; ++d) {
      const std::uint64_t lo = std::max(d * D + 1, ceil_root(m, d + 1));
      const std::uint64_t p = is_prime(lo) ? lo : next_prime(lo);
      if (best.p == 0 || p < best.p) best = {m, p, d};
    }
    if (best.colors_out() >= m) break;
    out.push_back(best);
    m = best.colors_out();
  }
  return out;
}

std::uint64_t linial_recolor(std::uint64_t color, const std::vector<std::uint64_t>& conflicts, const LinialStep& step) {
  for (std::uint64_t x = 0; x < step.p; ++x) {
    const std::uint64_t fx = poly_eval(color, step, x);
    bool clash = false;
    for (std::uint64_t o : conflicts) {
      if (o != color && poly_eval(o, step, x) == fx) {
        clash = true;
        break;
      }
    }
    if (!clash) return x * step.p + fx;
  }
  throw std::logic_error("Linial recoloring found no free evaluation point");
}

std::size_t flood_rounds(std::size_t n, std::size_t max_degree, std::uint64_t color_bound, const SimConfig& cfg) {
  const std::size_t info_bits = 2 + width_for(n) + width_for(color_bound);
  const std::size_t per_round = std::max<std::size_t>(1, cfg.bandwidth_bits(n) / info_bits);
  if (max_degree <= 1) return 1;
  return 1 + (max_degree - 1 + per_round - 1) / per_round;
}

LocIterResult locally_iterative(const Graph& g, const Coloring& psi, const SimConfig& cfg) {
  LocIterResult r;
  r.q = find_prime(g.max_degree());
  detail::LocallyIterative prog;
  prog.q = r.q;
  prog.width = width_for(r.q);
  std::vector<detail::LocallyIterative::State> st(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    if (psi[v] < 0 || static_cast<std::uint64_t>(psi[v]) >= r.q * r.q)
      throw std::invalid_argument("locally-iterative input color out of range");
    st[v].psi = static_cast<std::uint64_t>(psi[v]);
  }
  r.trace = run(g, prog, st, cfg, {"loc_iter", 0x10c});
  r.coloring.resize(g.size());
  r.blocked.resize(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    r.coloring[v] = st[v].color;
    r.blocked[v] = st[v].blocked;
  }
  return r;
}

namespace {

std::size_t square_max_degree(const Graph& g) {
  std::vector<NodeId> mark(g.size(), static_cast<NodeId>(-1));
  std::size_t best = 0;
  for (NodeId v = 0; v < g.size(); ++v) {
    std::size_t k = 0;
    mark[v] = v;
    for (NodeId a : g.neighbors(v)) {
      if (mark[a] != v) mark[a] = v, ++k;
      for (NodeId b : g.neighbors(a))
        if (mark[b] != v) mark[b] = v, ++k;
    }
    best = std::max(best, k);
  }
  return best;
}

}  // namespace

DetResult d2_color_det(const Graph& g, const SimConfig& cfg) {
  DetResult r;
  const std::size_t n = g.size();
  const std::size_t delta = g.max_degree();
  if (delta == 0) {
    r.coloring.assign(n, 0);
    return r;
  }
  r.q = find_prime(delta);
  r.square_degree = square_max_degree(g);
  const DirectNet net{g};

  Coloring ids(n);
  for (NodeId v = 0; v < n; ++v) ids[v] = v;
  r.linial_colors = n;
  if (n >= r.q * r.q) {
    const auto sched = linial_schedule(n, static_cast<std::uint64_t>(delta) * delta);
    auto lin = linial_stage(net, ids, n, static_cast<std::uint64_t>(delta) * delta, 2, cfg);
    r.after_linial = std::move(lin.coloring);
    r.trace.append(lin.trace);
    r.linial_colors = sched.empty() ? n : sched.back().colors_out();
    if (r.linial_colors >= kLinialConstant * delta * delta * delta * delta)
      throw std::logic_error("Linial stage left too many colors");
  } else {
    r.after_linial = ids;
  }

  auto li = locally_iterative(g, r.after_linial, cfg);
  r.trace.append(li.trace);
  r.after_loc_iter = li.coloring;
  r.blocked = li.blocked;
  for (auto b : r.blocked) r.max_blocked = std::max<std::size_t>(r.max_blocked, b);

  const std::uint64_t c = r.square_degree + 1;
  if (r.q > c) {
    auto red = color_reduction(net, li.coloring, c, r.q - c, 2, flood_rounds(n, delta, r.q, cfg), cfg);
    r.trace.append(red.trace);
    r.coloring = std::move(red.coloring);
  } else {
    r.coloring = std::move(li.coloring);
  }
  return r;
}

}  // namespace d2
