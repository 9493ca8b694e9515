#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace d2 {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable simple undirected graph in CSR form. Node ids are 0..n-1 and
/// neighbor lists are sorted.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an undirected edge list. Rejects self-loops,
  /// duplicate edges (in either orientation) and out-of-range endpoints.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges);

  /// Builds from per-node neighbor lists; lists must already be symmetric.
  static Graph from_adjacency(std::vector<std::vector<NodeId>> adjacency);

  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return targets_.size() / 2; }
  std::size_t max_degree() const noexcept { return delta_; }

  std::span<const NodeId> neighbors(NodeId v) const noexcept {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }

  bool adjacent(NodeId u, NodeId v) const noexcept;

  /// Position of `u` in the neighbor list of `v`, or -1.
  std::ptrdiff_t port_of(NodeId v, NodeId u) const noexcept;

  /// Edges (u, v) with u < v, in lexicographic order.
  std::vector<Edge> edges() const;

  /// Subgraph induced by the nodes with keep[v] set; ids are preserved and
  /// dropped nodes become isolated.
  Graph induced_keep_ids(const std::vector<char>& keep) const;

  bool operator==(const Graph& other) const = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
  std::size_t delta_ = 0;
};

/// G²: u ~ v iff 1 ≤ dist_G(u, v) ≤ 2.
class SquareGraph : public Graph {
 public:
  SquareGraph() = default;
  explicit SquareGraph(Graph g) : Graph(std::move(g)) {}
};

/// Exact square via two-step BFS from each node.
SquareGraph square(const Graph& g);

/// G^k for k ≥ 1 (bounded BFS from each node).
Graph power(const Graph& g, unsigned k);

/// |N_{G²}(u) ∩ N_{G²}(v)|.
std::size_t common_d2_neighbors(const SquareGraph& sq, NodeId u, NodeId v);
std::size_t common_d2_neighbors(const Graph& g, NodeId u, NodeId v);

/// Non-negative rational with 64-bit parts.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational& o) const { return num * o.den == o.num * den; }
  auto operator<=>(const Rational& o) const { return num * o.den <=> o.num * den; }
};

/// Sparsity ζ of v: (C(Δ²,2) − |E(G²[N_{G²}(v)])|) / Δ², where Δ is the max
/// degree of G. Missing d2-neighbors count as phantom nodes with no edges.
Rational sparsity(const Graph& g, const SquareGraph& sq, NodeId v);
Rational sparsity(const Graph& g, NodeId v);

enum class GraphKind { gnp, random_regular, star, clique_chain, path, cycle };

struct GenParams {
  std::size_t n = 0;
  double p = 0.0;         // gnp
  std::size_t degree = 0; // random_regular; clique_chain gadget degree (2, 3 or 7)
  std::size_t copies = 0; // clique_chain: number of gadget copies (0 = fill n)
};

GraphKind parse_graph_kind(const std::string& name);
std::string to_string(GraphKind kind);

/// Deterministic for a fixed seed. Throws GraphError on infeasible params.
Graph generate(GraphKind kind, const GenParams& params, std::uint64_t seed);

Graph make_path(std::size_t n);
Graph make_cycle(std::size_t n);
Graph make_star(std::size_t n);
Graph make_gnp(std::size_t n, double p, std::uint64_t seed);
Graph make_random_regular(std::size_t n, std::size_t d, std::uint64_t seed);

/// Moore graph of diameter 2 for degree 2 (C5), 3 (Petersen) or 7
/// (Hoffman–Singleton); its square is the complete graph on d²+1 nodes.
Graph make_moore(std::size_t degree);

/// `copies` Moore gadgets of the given degree chained into one connected
/// graph by rewiring one edge per gadget, so every node keeps degree d and
/// every gadget stays within one edge of a (d²+1)-clique in G².
Graph make_clique_chain(std::size_t degree, std::size_t copies);

/// Edge-list text format: optional "# nodes N" header, then "u v" lines.
Graph load_edge_list(const std::filesystem::path& path);
Graph parse_edge_list(const std::string& text);
void save_edge_list(const Graph& g, const std::filesystem::path& path);
std::string format_edge_list(const Graph& g);

}  // namespace d2
