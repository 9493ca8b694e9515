#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "d2color/congest.hpp"
#include "d2color/protocol.hpp"
#include "d2color/types.hpp"

namespace d2 {

enum class Profile { desk, paper };

struct RandConfig {
  Profile profile = Profile::desk;
  double c0 = 4.0;          ///< initial trials: c0·log n iterations
  double c1 = 0.25;         ///< halving loop starts at τ = c1Δ²
  double c2 = 2.0;          ///< Step 0 threshold and loop floor c2·log n
  double c3 = 1.0;          ///< ρ = c3(φ/τ)² log n
  double c10 = 16.0;        ///< similarity sample size c10·log n
  double c11 = 1.0;         ///< XOR prefix slack
  double query_scale = 6000.0;  ///< query probability 1/(scale·φ) ...
  double query_floor = 8.0;     ///< ... raised to floor/Δ² (0 disables)
  std::size_t max_redraws = 64;
  std::optional<std::size_t> handlers;  ///< Z, default Δ
  std::optional<std::size_t> informed;  ///< P, default Δ⌈√(Δ log n)⌉

  /// Constants exactly as stated in the analysis; c7 = 1 in c3 = 32/c7.
  static RandConfig paper();
};

/// [u, w] or [u, x, w].
struct HPath {
  std::array<NodeId, 3> hop{};
  std::uint8_t len = 0;
  NodeId target() const { return hop[len - 1]; }
  std::span<const NodeId> view() const { return {hop.data(), len}; }
};

inline constexpr std::uint8_t kH = 1;
inline constexpr std::uint8_t kHhat = 2;

/// Per-node state shared by every stage of the randomized algorithm.
struct RandNode {
  Color color = kLive;
  NeighborColors nbr;

  // similarity: own_set is N²(v) (exact mode) or S_v (sampled mode)
  std::vector<NodeId> own_set;
  std::vector<std::vector<NodeId>> port_sets;
  std::vector<std::uint8_t> direct;  ///< flags of (self, neighbor on port)
  std::unordered_map<std::uint64_t, std::uint8_t> pair_cache;
  bool has_h = false;
  std::size_t stream_cursor = 0;

  // sampler
  std::vector<HPath> samples;   ///< R_u
  std::vector<HPath> handlers;  ///< handler paths per block (LearnPalette)
  std::vector<std::uint64_t> sample_b;
  std::vector<std::uint64_t> sample_best;
  std::vector<HPath> sample_path;
  std::vector<char> sample_want;
  PortQueues queues;

  // reduce-phase scratch
  bool active = false;
  std::uint64_t q1_prio = 0;
  std::ptrdiff_t q1_port = -1;
  bool u_role = false;
  NodeId u_v = 0, u_via = 0;
  std::uint64_t u_prio = 0;
  Color u_hat = kLive;
  std::uint32_t u_paths = 0;
  bool u_used = false;
  bool u_direct_pending = false;
  bool w_role = false;
  bool w_d2 = false;
  std::vector<NodeId> w_back;
  std::uint64_t w_prio = 0;
  bool acked = false;
  std::vector<Color> proposals;
  Color trying = kLive;
  bool rejected = false;
  std::vector<Color> tries;
  std::vector<char> conflict;

  // audit counters
  std::uint64_t live_phases = 0;
  std::uint64_t activations = 0;
  std::uint64_t queries_sent = 0;
  std::uint64_t queries_dropped = 0;
  std::uint64_t proposals_sent = 0;
  std::uint64_t proposals_received = 0;
  std::uint64_t own_color_proposals = 0;  ///< Step-5 proposals sent by this node

  // LearnPalette / FinishColoring
  std::vector<NodeId> live_d2;
  struct Handled {
    NodeId v;
    std::uint32_t block;
    std::vector<NodeId> back;  ///< path to v
    std::vector<Color> seen;   ///< C_v^i
  };
  std::vector<Handled> handled;
  std::unordered_map<std::uint64_t, HPath> informed;  ///< (v, block) → path to the handler
  std::unordered_map<std::uint64_t, char> relayed;                    ///< (v, color) already forwarded
  std::vector<Color> palette;  ///< T'_v, ascending
  std::vector<Color> palette_removed;
  bool palette_known = false;
  std::size_t busy_round = static_cast<std::size_t>(-1);
};

struct ReduceStats {
  double phi = 0;
  double tau = 0;
  std::size_t rho = 0;
  std::size_t rounds = 0;          ///< phase rounds (23ρ)
  std::size_t sample_rounds = 0;
  std::size_t redraws = 0;
  std::size_t live_before = 0;
  std::size_t live_after = 0;
  std::uint64_t node_iterations = 0;  ///< Σ over phases of live nodes at phase start
  std::uint64_t live_phases = 0;
  std::uint64_t activations = 0;
  std::uint64_t queries = 0;
  std::uint64_t dropped = 0;
  std::uint64_t proposals = 0;
};

struct PaletteReport {
  bool flooding = false;
  std::vector<NodeId> live;
  std::vector<std::vector<Color>> palettes;  ///< T'_v for each live node, ascending
  Coloring snapshot;                         ///< coloring when the palettes were learned
  std::size_t rounds = 0;
  std::size_t missing_handlers = 0;
};

/// The randomized algorithm, stage by stage, over one persistent state.
class RandRun {
 public:
  RandRun(const Graph& g, const SimConfig& sim, const RandConfig& cfg = {});

  const Graph& graph() const { return g_; }
  std::size_t log_n() const { return log_n_; }
  std::size_t delta() const { return delta_; }
  std::uint64_t palette_size() const { return palette_; }
  std::vector<RandNode>& nodes() { return nodes_; }
  const std::vector<RandNode>& nodes() const { return nodes_; }
  SimTrace& trace() { return trace_; }
  const SimTrace& trace() const { return trace_; }
  Coloring coloring() const;
  std::size_t live_count() const;

  std::size_t rho(double phi, double tau) const;
  double query_probability(double phi) const;
  double activation_probability(double phi, double tau) const { return tau / (8.0 * phi); }
  /// L' = max(0, 2⌈log₂Δ⌉ − c11⌈log₂ log₂ n⌉).
  unsigned prefix_bits() const;
  bool exact_similarity() const;

  /// Installs a partial coloring with consistent neighbor views (test fixture).
  void assign(const Coloring& coloring);
  void initial_trials(std::size_t iterations);
  void build_similarity();
  /// Replaces the learned H/Ĥ by an oracle (test fixture) and re-announces HAS_H.
  void set_h_oracle(std::function<std::uint8_t(NodeId, NodeId)> oracle);
  /// H/Ĥ flags for the pair (u, w) as seen at node `at`, which must be u,
  /// or a common neighbor of u and w.
  std::uint8_t flags_at(NodeId at, NodeId u, NodeId w);
  /// Fills samples (or handlers) with `count` random H-neighbors for every
  /// node with participants[v] set; returns the number of redrawn repetitions.
  std::size_t sample_h_neighbors(std::size_t count, const std::vector<char>& participants, bool handlers = false);
  ReduceStats reduce(double phi, double tau);
  PaletteReport learn_palette();
  std::size_t finish_coloring();

 private:
  std::uint8_t classify(std::size_t common) const;
  void announce_h();
  SimTrace run_stage(const auto& program, const std::string& label, std::uint64_t stream);

  Graph g_;
  SimConfig sim_;
  RandConfig cfg_;
  std::size_t n_ = 0;
  std::size_t delta_ = 0;
  std::size_t log_n_ = 1;
  std::uint64_t palette_ = 1;
  std::vector<RandNode> nodes_;
  SimTrace trace_;
  std::function<std::uint8_t(NodeId, NodeId)> oracle_;
  std::uint64_t stage_ = 0;
  std::string sample_label_ = "sample";
};

/// Colors of block i when [0, Δ²] is cut into Z blocks of ⌊Δ²/Z⌋; the
/// last block also holds Δ².
std::pair<Color, Color> block_range(std::size_t i, std::size_t delta, std::size_t z);
std::size_t block_of(Color c, std::size_t delta, std::size_t z);

struct RandResult {
  Coloring coloring;
  SimTrace trace;
  bool delegated = false;
  std::size_t live_after_trials = 0;
  std::vector<ReduceStats> reduces;
  PaletteReport palette;
  std::size_t finish_rounds = 0;
};

/// Improved-d2-Color. Falls back to the deterministic pipeline when
/// Δ² < c2·log n.
RandResult d2_color_rand(const Graph& g, const SimConfig& sim, const RandConfig& cfg = {});

}  // namespace d2
