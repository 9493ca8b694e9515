#include "d2color/verify.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>
#include <unordered_map>

namespace d2 {

namespace {

VerifyReport scan(const Graph& conflict_graph, const Coloring& coloring, std::uint64_t bound) {
  if (coloring.size() != conflict_graph.size()) throw std::invalid_argument("coloring size differs from node count");
  VerifyReport r;
  r.bound = bound;
  std::vector<Color> seen;
  for (NodeId v = 0; v < coloring.size(); ++v) {
    const Color c = coloring[v];
    if (c < 0) {
      r.live.push_back(v);
      continue;
    }
    seen.push_back(c);
    r.max_color = std::max(r.max_color, c);
    for (NodeId u : conflict_graph.neighbors(v))
      if (u > v && coloring[u] == c) r.violations.push_back({v, u, c});
  }
  std::sort(seen.begin(), seen.end());
  r.distinct_colors = static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
  r.complete = r.live.empty();
  r.within_bound = r.max_color < 0 || static_cast<std::uint64_t>(r.max_color) < bound;
  r.valid = r.complete && r.within_bound && r.violations.empty();
  return r;
}

}  // namespace

VerifyReport check_d2(const Graph& g, const Coloring& coloring, std::uint64_t bound) {
  return scan(square(g), coloring, bound);
}

VerifyReport check_d2(const SquareGraph& sq, const Coloring& coloring, std::uint64_t bound) {
  return scan(sq, coloring, bound);
}

VerifyReport check_proper(const Graph& g, const Coloring& coloring, std::uint64_t bound) {
  return scan(g, coloring, bound);
}

std::vector<Color> remaining_palette(const Graph& g, const SquareGraph& sq, const Coloring& coloring, NodeId v) {
  const Color palette = static_cast<Color>(g.max_degree() * g.max_degree()) + 1;
  std::vector<Color> used;
  for (NodeId u : sq.neighbors(v))
    if (coloring[u] >= 0) used.push_back(coloring[u]);
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::vector<Color> free;
  std::size_t j = 0;
  for (Color c = 0; c < palette; ++c) {
    while (j < used.size() && used[j] < c) ++j;
    if (j < used.size() && used[j] == c) continue;
    free.push_back(c);
  }
  return free;
}

std::int64_t leeway(const Graph& g, const SquareGraph& sq, const Coloring& coloring, NodeId v) {
  std::vector<Color> used;
  for (NodeId u : sq.neighbors(v))
    if (coloring[u] >= 0) used.push_back(coloring[u]);
  std::sort(used.begin(), used.end());
  const auto distinct = std::unique(used.begin(), used.end()) - used.begin();
  return static_cast<std::int64_t>(g.max_degree() * g.max_degree()) + 1 - distinct;
}

std::int64_t slack(const Graph& g, const SquareGraph& sq, const Coloring& coloring, NodeId v) {
  std::int64_t live = 0;
  for (NodeId u : sq.neighbors(v)) live += coloring[u] < 0 ? 1 : 0;
  return leeway(g, sq, coloring, v) - live;
}

void with_palette_stats(VerifyReport& report, const Graph& g, const SquareGraph& sq, const Coloring& coloring) {
  report.leeway.resize(g.size());
  report.slack.resize(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    report.leeway[v] = leeway(g, sq, coloring, v);
    report.slack[v] = slack(g, sq, coloring, v);
  }
}

std::string VerifyReport::to_json() const {
  nlohmann::json j;
  j["valid"] = valid;
  j["complete"] = complete;
  j["within_bound"] = within_bound;
  j["bound"] = bound;
  j["distinct_colors"] = distinct_colors;
  j["max_color"] = max_color;
  j["live"] = live;
  auto& conflicts = j["violations"] = nlohmann::json::array();
  for (const auto& c : violations) conflicts.push_back({{"u", c.u}, {"v", c.v}, {"color", c.color}});
  if (!leeway.empty()) {
    j["leeway"] = leeway;
    j["slack"] = slack;
  }
  return j.dump(2);
}

std::string VerifyReport::csv_header() { return "valid,complete,within_bound,conflicts,live,distinct_colors,max_color,bound"; }

std::string VerifyReport::csv_row() const {
  std::ostringstream os;
  os << valid << ',' << complete << ',' << within_bound << ',' << violations.size() << ',' << live.size() << ','
     << distinct_colors << ',' << max_color << ',' << bound;
  return os.str();
}

double flag_threshold(std::size_t n, double lambda, double c) {
  return c * std::log2(static_cast<double>(std::max<std::size_t>(n, 2))) / (lambda * lambda);
}

namespace {

// Per-part (red, blue) counts of v's neighbors.
void tally(const Graph& g, const Partition& partition, const std::vector<Side>& sides, NodeId v,
           std::unordered_map<std::uint32_t, std::pair<std::size_t, std::size_t>>& counts) {
  counts.clear();
  for (NodeId u : g.neighbors(v)) {
    auto& c = counts[partition.part_of[u]];
    (sides[u] == Side::red ? c.first : c.second) += 1;
  }
}

}  // namespace

std::vector<char> compute_flags(const Graph& g, const Partition& partition, const std::vector<Side>& sides,
                                double lambda, double threshold) {
  std::vector<char> flags(g.size(), 0);
  std::unordered_map<std::uint32_t, std::pair<std::size_t, std::size_t>> counts;
  for (NodeId v = 0; v < g.size(); ++v) {
    tally(g, partition, sides, v, counts);
    for (const auto& [part, rb] : counts) {
      const double deg = static_cast<double>(rb.first + rb.second);
      if (deg < threshold) continue;
      const double limit = (1.0 + lambda) * deg / 2.0;
      if (static_cast<double>(rb.first) > limit || static_cast<double>(rb.second) > limit) {
        flags[v] = 1;
        break;
      }
    }
  }
  return flags;
}

SplitSummary check_split(const Graph& g, const Partition& partition, const std::vector<Side>& sides, double lambda,
                         double threshold_const) {
  SplitSummary s;
  s.threshold = flag_threshold(g.size(), lambda, threshold_const);
  s.flags = compute_flags(g, partition, sides, lambda, s.threshold);
  s.flagged = static_cast<std::size_t>(std::count(s.flags.begin(), s.flags.end(), 1));
  std::unordered_map<std::uint32_t, std::pair<std::size_t, std::size_t>> counts;
  for (NodeId v = 0; v < g.size(); ++v) {
    tally(g, partition, sides, v, counts);
    for (const auto& [part, rb] : counts) {
      const std::size_t deg = rb.first + rb.second;
      s.max_part_degree = std::max(s.max_part_degree, deg);
      if (static_cast<double>(deg) < s.threshold) continue;
      const double imbalance = 2.0 * static_cast<double>(std::max(rb.first, rb.second)) / static_cast<double>(deg) - 1.0;
      s.worst_imbalance = std::max(s.worst_imbalance, imbalance);
    }
  }
  return s;
}

std::size_t max_part_degree(const Graph& g, const Partition& partition) {
  std::size_t best = 0;
  std::unordered_map<std::uint32_t, std::size_t> counts;
  for (NodeId v = 0; v < g.size(); ++v) {
    counts.clear();
    for (NodeId u : g.neighbors(v)) best = std::max(best, ++counts[partition.part_of[u]]);
  }
  return best;
}

}  // namespace d2
