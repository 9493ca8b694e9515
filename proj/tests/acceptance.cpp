// One line per acceptance criterion. Exit status is nonzero when a gated
// criterion fails; criterion 9 is reported only.

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <iostream>
#include <sstream>

#include "d2color/cli.hpp"
#include "d2color/det_d2.hpp"
#include "d2color/rand_d2.hpp"
#include "d2color/rng.hpp"
#include "d2color/splitting.hpp"
#include "d2color/verify.hpp"

using namespace d2;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Line {
  int id;
  std::string name;
  bool gated = true;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

std::vector<Line> lines;

void report(Line l) {
  std::printf("[%s] %2d %-28s %s (%.1fs)\n", !l.gated ? "INFO" : l.pass ? "PASS" : "FAIL", l.id, l.name.c_str(),
              l.detail.c_str(), l.seconds);
  std::fflush(stdout);
  lines.push_back(std::move(l));
}

SimConfig seeded(std::uint64_t seed, unsigned threads = 1) {
  SimConfig s;
  s.seed = seed;
  s.threads = threads;
  return s;
}

struct Instance {
  std::string name;
  Graph g;
};

std::vector<Instance> suite() {
  std::vector<Instance> out;
  for (std::size_t n : {256u, 1024u, 4096u}) {
    const std::string tag = "@" + std::to_string(n);
    out.push_back({"path" + tag, make_path(n)});
    out.push_back({"cycle" + tag, make_cycle(n)});
    out.push_back({"star" + tag, make_star(n)});
    out.push_back({"clique_chain" + tag, make_clique_chain(7, n / 50)});
    for (std::size_t d : {4u, 8u, 16u}) out.push_back({"rr" + std::to_string(d) + tag, make_random_regular(n, d, 100 + d)});
    out.push_back({"gnp" + tag, make_gnp(n, 8.0 / static_cast<double>(n), 7)});
  }
  return out;
}

// fan: node 0 – five middles – ten leaves each
Graph fan50() {
  std::vector<Edge> e;
  for (NodeId m = 1; m <= 5; ++m) {
    e.emplace_back(0, m);
    for (NodeId j = 0; j < 10; ++j) e.emplace_back(m, 6 + (m - 1) * 10 + j);
  }
  return Graph::from_edges(56, e);
}

std::uint64_t split_bound(const Graph& g) {
  const std::uint64_t d = g.max_degree();
  return std::max<std::uint64_t>(1, 2 * d * d);
}

}  // namespace

int main() {
  const auto start = Clock::now();
  const auto instances = suite();

  // ---- 1, 3, 6, 10 share the suite runs
  std::size_t violations = 0;
  std::size_t max_blocked_excess = 0, det_runs = 0;
  std::size_t reduce_phases = 0, reduce_bad = 0;
  {
    const auto t = Clock::now();
    std::size_t runs = 0, bad = 0;
    std::ostringstream fails;
    for (const auto& [name, g] : instances) {
      const std::uint64_t d = g.max_degree();
      const std::uint64_t b = d * d + 1;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = d2_color_rand(g, seeded(seed));
        const auto rep = check_d2(g, r.coloring, b);
        ++runs;
        violations += r.trace.violation_count;
        if (!rep.valid) {
          ++bad;
          fails << " rand:" << name << "/" << seed;
        }
        for (const auto& st : r.reduces) {
          reduce_phases += st.rho;
          if (st.rounds != 23 * st.rho) ++reduce_bad;
        }
      }
      const auto det = d2_color_det(g, seeded(1));
      ++runs;
      ++det_runs;
      violations += det.trace.violation_count;
      if (!check_d2(g, det.coloring, b).valid) {
        ++bad;
        fails << " det:" << name;
      }
      if (det.max_blocked > 2 * d * d) ++max_blocked_excess;
      const auto sp = color_g2_splitting(g, 1.0, seeded(1));
      ++runs;
      violations += sp.trace.violation_count;
      if (!check_d2(g, sp.coloring, split_bound(g)).valid) {
        ++bad;
        fails << " split:" << name;
      }
    }
    const double secs = since(t);
    std::ostringstream os;
    os << runs << " runs on " << instances.size() << " graphs, invalid " << bad << fails.str() << ", wall " << secs
       << "s (limit 600s)";
    report({1, "validity", true, bad == 0 && secs <= 600, os.str(), secs});
  }

  // ---- 2 determinism
  {
    const auto t = Clock::now();
    bool ok = true;
    std::ostringstream os;
    const std::vector<Instance> picks{{"rr8@1024", make_random_regular(1024, 8, 108)},
                                      {"gnp@1024", make_gnp(1024, 8.0 / 1024, 7)},
                                      {"clique_chain@1024", make_clique_chain(7, 20)}};
    for (const auto& [name, g] : picks) {
      const auto det = d2_color_det(g, seeded(1)).coloring;
      const auto sp = color_g2_splitting(g, 1.0, seeded(1)).coloring;
      for (int rep = 0; rep < 4; ++rep) {
        ok &= d2_color_det(g, seeded(1)).coloring == det;
        ok &= color_g2_splitting(g, 1.0, seeded(1)).coloring == sp;
      }
      ok &= d2_color_det(g, seeded(1, 4)).coloring == det;
      ok &= color_g2_splitting(g, 1.0, seeded(1, 4)).coloring == sp;
      const auto rnd = d2_color_rand(g, seeded(33)).coloring;
      ok &= d2_color_rand(g, seeded(33)).coloring == rnd;
      ok &= d2_color_rand(g, seeded(33, 4)).coloring == rnd;
      if (!ok) os << " differs on " << name;
    }
    os << (ok ? "det, split: 5 reruns + 4 threads identical; rand: fixed seed identical on 3 graphs" : "");
    report({2, "determinism", true, ok, os.str(), since(t)});
  }

  // ---- 3 bandwidth
  {
    const auto t = Clock::now();
    SimConfig canary = seeded(1);
    canary.beta = 1;
    const Graph g = make_random_regular(256, 8, 3);
    const auto c1 = d2_color_det(g, canary).trace.violation_count;
    const auto c2 = d2_color_rand(g, canary).trace.violation_count;
    std::ostringstream os;
    os << "beta=32 violations " << violations << " over the suite; beta=1 canary det " << c1 << ", rand " << c2;
    report({3, "bandwidth", true, violations == 0 && c1 >= 1 && c2 >= 1, os.str(), since(t)});
  }

  // ---- 4 derandomized splitting
  {
    const auto t = Clock::now();
    std::size_t instances4 = 0, nonzero = 0, relevant_nodes = 0;
    StreamRng rng(404);
    const double lambdas[] = {0.25, 0.5, 1.0};
    // the last three are dense λ = 0.5 instances where the gate admits most nodes
    const std::pair<std::size_t, double> dense[] = {{1100, 0.5}, {1300, 0.5}, {1500, 0.45}};
    for (int i = 0; i < 100; ++i) {
      const std::size_t n = 64 + rng.below(2048 - 64 + 1);
      Graph g;
      double lambda = lambdas[i % 3];
      if (i >= 97) {
        g = make_gnp(dense[i - 97].first, dense[i - 97].second, rng());
        lambda = 0.5;
      } else {
        switch (i % 4) {
          case 0: g = make_gnp(n, (4.0 + rng.below(60)) / static_cast<double>(n), rng()); break;
          case 1: g = make_random_regular(n - n % 2, 2 + 2 * rng.below(16), rng()); break;
          case 2: g = make_gnp(n / 4 + 16, 0.3, rng()); break;
          default: g = make_star(n); break;
        }
      }
      Partition p = Partition::trivial(g.size());
      if (i % 5 == 4 && i < 97) {
        p.parts = 4;
        for (NodeId v = 0; v < g.size(); ++v) p.part_of[v] = static_cast<std::uint32_t>(rng.below(4));
      }
      const auto dec = reference_decomposition(g, 2);
      const auto r = derand_split(g, p, lambda, dec, seeded(i));
      ++instances4;
      nonzero += r.split.flagged > 0;
      const double thr = r.split.threshold;
      for (NodeId v = 0; v < g.size(); ++v) {
        std::map<std::uint32_t, std::size_t> deg;
        for (NodeId w : g.neighbors(v)) ++deg[p.part_of[w]];
        for (const auto& [part, c] : deg)
          if (static_cast<double>(c) >= thr && lambda < 1.0) {
            ++relevant_nodes;
            break;
          }
      }
    }
    // small gates, where the flags do constrain the split and E[ΣF] < 1
    std::size_t tight = 0, tight_nonzero = 0;
    SplitConfig low;
    low.threshold_const = 0.05;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const Graph g = s == 0 ? make_star(64) : make_random_regular(256, 32, 8 + s);
      const auto dec = reference_decomposition(g, 2);
      SplitConfig cfg = low;
      if (s > 0) cfg.k = 8;
      const auto r = derand_split(g, Partition::trivial(g.size()), 0.5, dec, seeded(s), cfg);
      ++tight;
      tight_nonzero += r.split.flagged > 0;
    }
    std::ostringstream os;
    os << "sum F > 0 on " << nonzero << "/" << instances4 << " (literal gate; " << relevant_nodes
       << " gated-in nodes); low-gate companions " << tight_nonzero << "/" << tight;
    report({4, "derand exactness", true, nonzero == 0 && tight_nonzero == 0, os.str(), since(t)});
  }

  // ---- 5 randomized splitting
  {
    const auto t = Clock::now();
    const Graph g = make_random_regular(1024, 64, 5);
    const auto dec = reference_decomposition(g, 2);
    const auto p = Partition::trivial(g.size());
    int clean = 0, clean_low = 0;
    SplitConfig low;
    low.threshold_const = 0.05;
    for (std::uint64_t s = 0; s < 100; ++s) {
      clean += randomized_split(g, p, 0.5, dec.cluster_of, s).flagged == 0;
      clean_low += randomized_split(g, p, 0.5, dec.cluster_of, s, low).flagged == 0;
    }
    std::ostringstream os;
    os << clean << "/100 clean (need 99); every node gated in: " << clean_low << "/100 (E[sum F] = 0.025 per run)";
    report({5, "randomized splitting", true, clean >= 99, os.str(), since(t)});
  }

  // ---- 6 blocked phases
  {
    const auto t = Clock::now();
    std::size_t extra = 0, worst = 0, bound = 0;
    for (std::size_t d : {4u, 8u, 16u}) {
      const Graph g = make_random_regular(1024, d, 60 + d);
      const auto r = d2_color_det(g, seeded(1));
      ++extra;
      if (r.max_blocked > 2 * d * d) ++max_blocked_excess;
      if (r.max_blocked * bound >= worst * 2 * d * d) {
        worst = r.max_blocked;
        bound = 2 * d * d;
      }
    }
    std::ostringstream os;
    os << det_runs + extra << " locally-iterative runs, over 2*Delta^2 in " << max_blocked_excess
       << "; worst ratio " << worst << "/" << bound;
    report({6, "blocked phases", true, max_blocked_excess == 0, os.str(), since(t)});
  }

  // ---- 7 LearnPalette
  {
    const auto t = Clock::now();
    // with the default trial count every node is colored before palettes are
    // learned, so the trials are cut short to leave live nodes; Δ = 16 uses
    // handlers, Δ = 8 ≤ log n floods
    const Graph gs[] = {make_random_regular(1024, 16, 77), make_random_regular(1024, 8, 78)};
    const SquareGraph sqs[] = {square(gs[0]), square(gs[1])};
    RandConfig short_trials;
    short_trials.c0 = 0.25;
    std::size_t runs = 0, checked = 0, mismatched = 0, handler_runs = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Graph& g = gs[seed % 2];
      const SquareGraph& sq = sqs[seed % 2];
      const auto r = d2_color_rand(g, seeded(seed), short_trials);
      ++runs;
      handler_runs += !r.palette.flooding;
      for (std::size_t i = 0; i < r.palette.live.size(); ++i) {
        ++checked;
        mismatched += r.palette.palettes[i] != remaining_palette(g, sq, r.palette.snapshot, r.palette.live[i]);
      }
    }
    std::ostringstream os;
    os << runs << " runs (" << handler_runs << " via handlers), " << checked << " live nodes, " << mismatched
       << " mismatches";
    report({7, "LearnPalette exactness", true, mismatched == 0 && checked > 0, os.str(), since(t)});
  }

  // ---- 8 uniform sampling
  {
    const auto t = Clock::now();
    const Graph g = fan50();
    const auto oracle = [](NodeId a, NodeId b) -> std::uint8_t {
      return std::min(a, b) == 0 && std::max(a, b) >= 6 ? kH : 0;
    };
    std::vector<char> who(56, 0);
    who[0] = 1;
    int passed = 0;
    double worst = 1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RandRun run(g, seeded(800 + seed));
      run.set_h_oracle(oracle);
      run.sample_h_neighbors(10000, who);
      std::vector<double> freq(50, 0);
      for (const auto& path : run.nodes()[0].samples) freq[path.target() - 6] += 1;
      double chi = 0;
      for (double f : freq) chi += (f - 200.0) * (f - 200.0) / 200.0;
      const double pval = boost::math::cdf(boost::math::complement(boost::math::chi_squared(49), chi));
      worst = std::min(worst, pval);
      passed += pval > 0.01;
    }
    std::ostringstream os;
    os << passed << "/20 seeds with p > 0.01 (need 18), min p " << worst;
    report({8, "uniform H-sampling", true, passed >= 18, os.str(), since(t)});
  }

  // ---- 9 scaling fits
  {
    const auto t = Clock::now();
    std::vector<CsvRow> rand_rows, det_rows;
    for (int e = 8; e <= 13; ++e)
      for (std::size_t d : {8u, 16u})
        for (std::uint64_t seed = 0; seed < 2; ++seed) {
          const Graph g = make_random_regular(std::size_t{1} << e, d, 900 + e);
          const auto r = d2_color_rand(g, seeded(seed));
          CsvRow row;
          row.n = g.size();
          row.delta = d;
          row.rounds_total = r.trace.rounds_used;
          rand_rows.push_back(row);
        }
    for (std::size_t d = 4; d <= 32; d += 4) {
      const Graph g = make_random_regular(512, d, 950 + d);
      const auto r = d2_color_det(g, seeded(1));
      CsvRow row;
      row.n = g.size();
      row.delta = d;
      row.rounds_total = r.trace.rounds_used;
      det_rows.push_back(row);
    }
    const auto fr = fit_report(rand_rows), fd = fit_report(det_rows);
    auto best = [](const FitReport& f) { return f.informative ? f.models[f.best].name : std::string("none"); };
    std::ostringstream os;
    os << "rand best: " << best(fr) << " (expected log n * log Delta); det best: " << best(fd)
       << " (expected Delta^2 + log* n)";
    report({9, "scaling fits", false, true, os.str(), since(t)});
    std::cout << "rand fit\n" << fr.text() << "det fit\n" << fd.text();
  }

  // ---- 10 reduce-phase round count
  {
    const auto t = Clock::now();
    const Graph g = make_clique_chain(7, 8);
    std::size_t paper_phases = 0, paper_bad = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      RandRun run(g, seeded(seed), RandConfig::paper());
      run.initial_trials(2);
      run.build_similarity();
      const std::size_t before = run.trace().rounds_used;
      const auto st = run.reduce(24, 12);
      paper_phases += st.rho;
      // the call also draws fresh H-neighbor samples, traced under their own label
      if (st.rounds != 23 * st.rho || run.trace().rounds_used - before != st.rounds + st.sample_rounds) ++paper_bad;
    }
    std::ostringstream os;
    os << "paper profile: " << paper_phases << " phases, off in " << paper_bad << " calls; desk pipeline: "
       << reduce_phases << " phases, off in " << reduce_bad << " calls; 23 rounds each";
    report({10, "reduce-phase rounds", true, paper_bad == 0 && reduce_bad == 0 && paper_phases > 0, os.str(),
            since(t)});
  }

  bool ok = true;
  for (const auto& l : lines) ok &= !l.gated || l.pass;
  std::printf("total %.1fs, %s\n", since(start), ok ? "all gated criteria pass" : "GATED CRITERIA FAILED");
  return ok ? 0 : 1;
}
