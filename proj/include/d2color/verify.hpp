#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "d2color/graph.hpp"
#include "d2color/types.hpp"

namespace d2 {

struct Conflict {
  NodeId u = 0;
  NodeId v = 0;
  Color color = 0;
  bool operator==(const Conflict&) const = default;
};

struct VerifyReport {
  bool valid = false;          ///< no conflicts, no live nodes, all colors below the bound
  bool complete = false;       ///< no live nodes
  bool within_bound = false;
  std::vector<Conflict> violations;
  std::vector<NodeId> live;
  std::size_t distinct_colors = 0;
  Color max_color = kLive;
  std::uint64_t bound = 0;
  std::vector<std::int64_t> leeway;  ///< filled by with_palette_stats
  std::vector<std::int64_t> slack;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Exhaustive conflict scan over the square: every pair at distance 1 or 2
/// must differ; all colors must be < bound.
VerifyReport check_d2(const Graph& g, const Coloring& coloring, std::uint64_t bound);
VerifyReport check_d2(const SquareGraph& sq, const Coloring& coloring, std::uint64_t bound);

/// Distance-1 variant (proper coloring of g itself).
VerifyReport check_proper(const Graph& g, const Coloring& coloring, std::uint64_t bound);

/// (Δ²+1) − |colors held by N_{G²}(v)|.
std::int64_t leeway(const Graph& g, const SquareGraph& sq, const Coloring& coloring, NodeId v);
/// leeway − number of live d2-neighbors.
std::int64_t slack(const Graph& g, const SquareGraph& sq, const Coloring& coloring, NodeId v);
/// Colors in [0, Δ²] not held by any d2-neighbor of v, ascending.
std::vector<Color> remaining_palette(const Graph& g, const SquareGraph& sq, const Coloring& coloring, NodeId v);

/// Adds per-node leeway and slack to a report.
void with_palette_stats(VerifyReport& report, const Graph& g, const SquareGraph& sq, const Coloring& coloring);

/// Flag threshold c·log₂ n / λ².
double flag_threshold(std::size_t n, double lambda, double c = 12.0);

/// F_v = 1 iff some part i has deg_i(v) ≥ threshold and more than
/// (1+λ)·deg_i(v)/2 neighbors of one side inside V_i.
std::vector<char> compute_flags(const Graph& g, const Partition& partition, const std::vector<Side>& sides,
                                double lambda, double threshold);

struct SplitSummary {
  std::size_t flagged = 0;
  std::vector<char> flags;
  double threshold = 0;
  /// max over gated (v, i) of 2·max(red, blue)/deg_i − 1; 0 when nothing is gated.
  double worst_imbalance = 0;
  /// max over all (v, i) of deg_i(v)
  std::size_t max_part_degree = 0;
};

SplitSummary check_split(const Graph& g, const Partition& partition, const std::vector<Side>& sides, double lambda,
                         double threshold_const = 12.0);

/// max over v and parts i of the number of G-neighbors of v inside V_i.
std::size_t max_part_degree(const Graph& g, const Partition& partition);

}  // namespace d2
