#include "d2color/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "d2color/rng.hpp"

namespace d2 {

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw GraphError("edge endpoint out of range: " + std::to_string(u) + " " + std::to_string(v));
    }
    if (u == v) throw GraphError("self-loop at node " + std::to_string(u));
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto& list = adj[v];
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
      throw GraphError("duplicate edge at node " + std::to_string(v));
    }
  }
  return from_adjacency(std::move(adj));
}

Graph Graph::from_adjacency(std::vector<std::vector<NodeId>> adjacency) {
  Graph g;
  const std::size_t n = adjacency.size();
  g.offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto& list = adjacency[v];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    g.offsets_[v + 1] = g.offsets_[v] + list.size();
    g.delta_ = std::max(g.delta_, list.size());
  }
  g.targets_.reserve(g.offsets_[n]);
  for (auto& list : adjacency) g.targets_.insert(g.targets_.end(), list.begin(), list.end());
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId u : g.neighbors(v)) {
      if (u == v) throw GraphError("self-loop at node " + std::to_string(v));
      if (u >= n || !g.adjacent(u, v)) throw GraphError("asymmetric adjacency at node " + std::to_string(v));
    }
  }
  return g;
}

bool Graph::adjacent(NodeId u, NodeId v) const noexcept {
  if (u >= size() || v >= size()) return false;
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::ptrdiff_t Graph::port_of(NodeId v, NodeId u) const noexcept {
  const auto nb = neighbors(v);
  const auto it = std::lower_bound(nb.begin(), nb.end(), u);
  if (it == nb.end() || *it != u) return -1;
  return it - nb.begin();
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (NodeId u = 0; u < size(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

Graph Graph::induced_keep_ids(const std::vector<char>& keep) const {
  std::vector<std::vector<NodeId>> adj(size());
  for (NodeId u = 0; u < size(); ++u) {
    if (!keep[u]) continue;
    for (NodeId v : neighbors(u)) {
      if (keep[v]) adj[u].push_back(v);
    }
  }
  return from_adjacency(std::move(adj));
}

Graph power(const Graph& g, unsigned k) {
  const std::size_t n = g.size();
  std::vector<std::vector<NodeId>> adj(n);
  std::vector<unsigned> dist(n, ~0u);
  std::vector<NodeId> frontier, next, touched;
  for (NodeId s = 0; s < n; ++s) {
    frontier.assign(1, s);
    dist[s] = 0;
    touched.assign(1, s);
    for (unsigned d = 1; d <= k && !frontier.empty(); ++d) {
      next.clear();
      for (NodeId x : frontier) {
        for (NodeId y : g.neighbors(x)) {
          if (dist[y] != ~0u) continue;
          dist[y] = d;
          touched.push_back(y);
          next.push_back(y);
          adj[s].push_back(y);
        }
      }
      frontier.swap(next);
    }
    for (NodeId t : touched) dist[t] = ~0u;
  }
  return Graph::from_adjacency(std::move(adj));
}

SquareGraph square(const Graph& g) { return SquareGraph(power(g, 2)); }

namespace {

std::size_t sorted_intersection_size(std::span<const NodeId> a, std::span<const NodeId> b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

}  // namespace

std::size_t common_d2_neighbors(const SquareGraph& sq, NodeId u, NodeId v) {
  return sorted_intersection_size(sq.neighbors(u), sq.neighbors(v));
}

std::size_t common_d2_neighbors(const Graph& g, NodeId u, NodeId v) {
  return common_d2_neighbors(square(g), u, v);
}

Rational sparsity(const Graph& g, const SquareGraph& sq, NodeId v) {
  const auto delta2 = static_cast<std::int64_t>(g.max_degree() * g.max_degree());
  if (delta2 == 0) return {0, 1};
  const auto nb = sq.neighbors(v);
  std::int64_t inside = 0;
  for (NodeId a : nb) {
    for (NodeId b : sq.neighbors(a)) {
      if (a < b && std::binary_search(nb.begin(), nb.end(), b)) ++inside;
    }
  }
  const std::int64_t full = delta2 * (delta2 - 1) / 2;
  return {full - inside, delta2};
}

Rational sparsity(const Graph& g, NodeId v) { return sparsity(g, square(g), v); }

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "gnp") return GraphKind::gnp;
  if (name == "random_regular" || name == "regular") return GraphKind::random_regular;
  if (name == "star") return GraphKind::star;
  if (name == "clique_chain") return GraphKind::clique_chain;
  if (name == "path") return GraphKind::path;
  if (name == "cycle") return GraphKind::cycle;
  throw GraphError("unknown graph kind: " + name);
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::gnp: return "gnp";
    case GraphKind::random_regular: return "random_regular";
    case GraphKind::star: return "star";
    case GraphKind::clique_chain: return "clique_chain";
    case GraphKind::path: return "path";
    case GraphKind::cycle: return "cycle";
  }
  return "unknown";
}

Graph make_path(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i < n; ++i) e.emplace_back(static_cast<NodeId>(i - 1), static_cast<NodeId>(i));
  return Graph::from_edges(n, e);
}

Graph make_cycle(std::size_t n) {
  if (n < 3) throw GraphError("cycle needs at least 3 nodes");
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i) e.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n));
  return Graph::from_edges(n, e);
}

Graph make_star(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i < n; ++i) e.emplace_back(0, static_cast<NodeId>(i));
  return Graph::from_edges(n, e);
}

Graph make_gnp(std::size_t n, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw GraphError("gnp probability must lie in [0, 1]");
  StreamRng rng(mix_keys(seed, 0x676e70));
  std::vector<Edge> e;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) e.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  }
  return Graph::from_edges(n, e);
}

Graph make_random_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (d >= n && n > 0 && d > 0) throw GraphError("regular degree must be below n");
  if ((n * d) % 2 != 0) throw GraphError("n * degree must be even");
  if (d == 0) return Graph::from_edges(n, {});
  StreamRng rng(mix_keys(seed, 0x726567));
  // Steger–Wormald pairing: draw random point pairs, accept only those that
  // keep the graph simple, restart when stuck.
  for (;;) {
    std::vector<NodeId> points;
    points.reserve(n * d);
    for (std::size_t v = 0; v < n; ++v) points.insert(points.end(), d, static_cast<NodeId>(v));
    std::vector<std::vector<NodeId>> adj(n);
    auto linked = [&](NodeId a, NodeId b) {
      return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end();
    };
    bool stuck = false;
    while (!points.empty() && !stuck) {
      std::size_t failures = 0;
      for (;;) {
        const std::size_t i = rng.below(points.size());
        const std::size_t j = rng.below(points.size());
        const NodeId a = points[i];
        const NodeId b = points[j];
        if (i != j && a != b && !linked(a, b)) {
          adj[a].push_back(b);
          adj[b].push_back(a);
          const std::size_t hi = std::max(i, j);
          const std::size_t lo = std::min(i, j);
          points[hi] = points.back();
          points.pop_back();
          points[lo] = points.back();
          points.pop_back();
          break;
        }
        if (++failures > 64 * points.size() + 64) {
          bool any = false;
          for (std::size_t x = 0; x < points.size() && !any; ++x) {
            for (std::size_t y = x + 1; y < points.size() && !any; ++y) {
              any = points[x] != points[y] && !linked(points[x], points[y]);
            }
          }
          if (!any) {
            stuck = true;
            break;
          }
          failures = 0;
        }
      }
    }
    if (!stuck) return Graph::from_adjacency(std::move(adj));
  }
}

Graph make_moore(std::size_t degree) {
  std::vector<Edge> e;
  switch (degree) {
    case 2:
      return make_cycle(5);
    case 3:
      for (NodeId i = 0; i < 5; ++i) {
        e.emplace_back(i, (i + 1) % 5);
        e.emplace_back(i + 5, (i + 2) % 5 + 5);
        e.emplace_back(i, i + 5);
      }
      return Graph::from_edges(10, e);
    case 7: {
      // Pentagons P_h and pentagrams Q_i; P_h[j] ~ Q_i[h*i + j].
      auto P = [](NodeId h, NodeId j) { return static_cast<NodeId>(5 * h + j % 5); };
      auto Q = [](NodeId i, NodeId j) { return static_cast<NodeId>(25 + 5 * i + j % 5); };
      for (NodeId h = 0; h < 5; ++h) {
        for (NodeId j = 0; j < 5; ++j) {
          e.emplace_back(P(h, j), P(h, j + 1));
          e.emplace_back(Q(h, j), Q(h, j + 2));
          for (NodeId i = 0; i < 5; ++i) e.emplace_back(P(h, j), Q(i, h * i + j));
        }
      }
      return Graph::from_edges(50, e);
    }
    default:
      throw GraphError("no Moore graph of diameter 2 for degree " + std::to_string(degree));
  }
}

Graph make_clique_chain(std::size_t degree, std::size_t copies) {
  if (copies == 0) throw GraphError("clique_chain needs at least one copy");
  const Graph gadget = make_moore(degree);
  const std::size_t k = gadget.size();
  if (copies == 1) return gadget;
  // Drop the edge (0, first neighbor of 0) in every copy and reconnect the
  // freed endpoints in a ring across copies.
  const NodeId a = 0;
  const NodeId b = gadget.neighbors(0)[0];
  std::vector<Edge> e;
  for (std::size_t c = 0; c < copies; ++c) {
    const auto base = static_cast<NodeId>(c * k);
    for (const auto& [u, v] : gadget.edges()) {
      if ((u == a && v == b) || (u == b && v == a)) continue;
      e.emplace_back(base + u, base + v);
    }
    const auto next = static_cast<NodeId>(((c + 1) % copies) * k);
    e.emplace_back(base + b, next + a);
  }
  return Graph::from_edges(copies * k, e);
}

Graph generate(GraphKind kind, const GenParams& params, std::uint64_t seed) {
  switch (kind) {
    case GraphKind::gnp: return make_gnp(params.n, params.p, seed);
    case GraphKind::random_regular: return make_random_regular(params.n, params.degree, seed);
    case GraphKind::star: return make_star(params.n);
    case GraphKind::path: return make_path(params.n);
    case GraphKind::cycle: return make_cycle(params.n);
    case GraphKind::clique_chain: {
      const std::size_t d = params.degree == 0 ? 3 : params.degree;
      const std::size_t k = d * d + 1;
      std::size_t copies = params.copies;
      if (copies == 0) copies = std::max<std::size_t>(1, params.n / k);
      return make_clique_chain(d, copies);
    }
  }
  throw GraphError("unknown graph kind");
}

Graph parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Edge> edges;
  std::size_t declared = 0;
  bool has_declared = false;
  std::size_t max_id_plus_one = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      std::istringstream header(line.substr(first + 1));
      std::string key;
      if (header >> key && key == "nodes") {
        if (!(header >> declared)) throw GraphError("line " + std::to_string(line_no) + ": bad nodes header");
        has_declared = true;
      }
      continue;
    }
    std::istringstream fields(line);
    long long u = -1, v = -1;
    std::string extra;
    if (!(fields >> u >> v) || (fields >> extra) || u < 0 || v < 0) {
      throw GraphError("line " + std::to_string(line_no) + ": expected two non-negative integers");
    }
    if (u == v) throw GraphError("line " + std::to_string(line_no) + ": self-loop");
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    max_id_plus_one = std::max<std::size_t>(max_id_plus_one, static_cast<std::size_t>(std::max(u, v)) + 1);
  }
  const std::size_t n = has_declared ? declared : max_id_plus_one;
  if (max_id_plus_one > n) throw GraphError("edge endpoint exceeds declared node count");
  std::vector<std::pair<NodeId, NodeId>> seen;
  seen.reserve(edges.size());
  for (auto [u, v] : edges) seen.emplace_back(std::min(u, v), std::max(u, v));
  std::vector<std::size_t> order(seen.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return seen[a] < seen[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (seen[order[i]] == seen[order[i - 1]]) {
      throw GraphError("duplicate edge " + std::to_string(seen[order[i]].first) + " " +
                       std::to_string(seen[order[i]].second));
    }
  }
  return Graph::from_edges(n, edges);
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_edge_list(buffer.str());
}

std::string format_edge_list(const Graph& g) {
  std::string out = "# nodes " + std::to_string(g.size()) + "\n";
  for (const auto& [u, v] : g.edges()) {
    out += std::to_string(u);
    out += ' ';
    out += std::to_string(v);
    out += '\n';
  }
  return out;
}

void save_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw GraphError("cannot write " + path.string());
  out << format_edge_list(g);
}

}  // namespace d2
