#pragma once

#include <unordered_map>
#include <vector>

#include "d2color/congest.hpp"
#include "d2color/types.hpp"

namespace d2 {

/// Runs programs directly on the communication graph.
struct DirectNet {
  const Graph& g;

  std::size_t size() const { return g.size(); }

  template <NodeProgram P>
  SimTrace run(const P& program, std::vector<typename P::State>& states, const SimConfig& cfg,
               const RunOptions& opts = {}) const {
    return d2::run(g, program, states, cfg, opts);
  }
};

/// Colors of a node's immediate neighbors, by port, with a multiset index.
class NeighborColors {
 public:
  void resize(std::size_t ports) {
    if (by_port_.size() != ports) {
      by_port_.assign(ports, kLive);
      counts_.clear();
    }
  }
  void set(std::size_t port, Color c) {
    const Color old = by_port_[port];
    if (old == c) return;
    if (old >= 0 && --counts_[old] == 0) counts_.erase(old);
    by_port_[port] = c;
    if (c >= 0) ++counts_[c];
  }
  Color operator[](std::size_t port) const { return by_port_[port]; }
  bool contains(Color c) const { return counts_.contains(c); }
  std::size_t ports() const { return by_port_.size(); }
  std::size_t live_ports() const {
    std::size_t k = 0;
    for (Color c : by_port_) k += c < 0 ? 1 : 0;
    return k;
  }

 private:
  std::vector<Color> by_port_;
  std::unordered_map<Color, std::uint32_t> counts_;
};

/// Middle-node side of a color trial: `tries[p]` is the candidate sent on
/// port p (kLive if none). A candidate conflicts when the middle node holds
/// or tries it, another neighbor tries it, or a colored neighbor holds it.
inline void evaluate_tries(const std::vector<Color>& tries, const NeighborColors& colors, Color own_color,
                           Color own_try, std::vector<char>& conflict) {
  conflict.assign(tries.size(), 0);
  std::unordered_map<Color, std::uint32_t> tried;
  for (Color c : tries)
    if (c >= 0) ++tried[c];
  for (std::size_t p = 0; p < tries.size(); ++p) {
    const Color c = tries[p];
    if (c < 0) continue;
    conflict[p] = (c == own_color || c == own_try || tried[c] > 1 || colors.contains(c)) ? 1 : 0;
  }
}

}  // namespace d2
