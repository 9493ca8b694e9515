#include "d2color/congest.hpp"

#include <cmath>
#include <sstream>

namespace d2 {

std::uint16_t Vocabulary::tag(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<std::uint16_t>(i);
  throw UnregisteredMessage("unregistered message kind: " + name);
}

std::size_t measure(const Message& msg, const Vocabulary& vocab, const BitWidths& widths) {
  if (!vocab.registered(msg.tag))
    throw UnregisteredMessage("unregistered message tag " + std::to_string(msg.tag));
  std::size_t bits = vocab.tag_bits();
  for (const Field& f : msg.fields) {
    switch (f.kind) {
      case FieldKind::id: bits += widths.id; break;
      case FieldKind::color: bits += widths.color; break;
      case FieldKind::raw: bits += f.width; break;
    }
  }
  if (!msg.route.empty()) bits += 6 + widths.id * (msg.route.ahead.size() + msg.route.trail.size());
  return bits;
}

std::size_t SimConfig::bandwidth_bits(std::size_t n) const {
  const double b = std::floor(beta * static_cast<double>(width_for(n)));
  return b < 0 ? 0 : static_cast<std::size_t>(b);
}

namespace {
std::string describe(const Violation& v) {
  std::ostringstream os;
  os << "bandwidth violation in round " << v.round << " on edge " << v.from << "->" << v.to << ": " << v.bits
     << " bits";
  return os.str();
}
}  // namespace

BandwidthViolation::BandwidthViolation(const Violation& v) : std::runtime_error(describe(v)), violation(v) {}

void SimTrace::append(const SimTrace& stage) {
  for (PhaseSpan span : stage.phases) {
    span.first_round += rounds_used;
    if (!phases.empty() && phases.back().label == span.label &&
        phases.back().first_round + phases.back().rounds == span.first_round) {
      phases.back().rounds += span.rounds;
    } else if (span.rounds > 0 || phases.empty() || phases.back().label != span.label) {
      phases.push_back(span);
    }
  }
  for (Violation v : stage.violations) {
    if (violations.size() >= kMaxStoredViolations) break;
    v.round += rounds_used;
    violations.push_back(v);
  }
  violation_count += stage.violation_count;
  max_edge_bits.insert(max_edge_bits.end(), stage.max_edge_bits.begin(), stage.max_edge_bits.end());
  live_count.insert(live_count.end(), stage.live_count.begin(), stage.live_count.end());
  rounds_used += stage.rounds_used;
  exhausted = exhausted || stage.exhausted;
  rng_draws += stage.rng_draws;
  bandwidth_bits = std::max(bandwidth_bits, stage.bandwidth_bits);
}

std::size_t SimTrace::max_bits() const {
  std::size_t m = 0;
  for (auto b : max_edge_bits) m = std::max(m, b);
  return m;
}

std::vector<std::pair<std::string, std::size_t>> SimTrace::rounds_by_phase() const {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& span : phases) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == span.label; });
    if (it == out.end())
      out.emplace_back(span.label, span.rounds);
    else
      it->second += span.rounds;
  }
  return out;
}

std::size_t SimTrace::rounds_in(const std::string& label) const {
  std::size_t total = 0;
  for (const auto& span : phases)
    if (span.label == label) total += span.rounds;
  return total;
}

std::string SimTrace::to_csv() const {
  std::ostringstream os;
  os << "round,max_edge_bits,live_count,phase_label\n";
  std::size_t span = 0;
  for (std::size_t r = 1; r <= rounds_used; ++r) {
    while (span + 1 < phases.size() && r >= phases[span].first_round + phases[span].rounds) ++span;
    os << r << ',' << (r - 1 < max_edge_bits.size() ? max_edge_bits[r - 1] : 0) << ','
       << (r - 1 < live_count.size() ? live_count[r - 1] : 0) << ','
       << (phases.empty() ? std::string() : phases[span].label) << '\n';
  }
  return os.str();
}

namespace {

template <class Sink>
void route_start(const NodeContext& ctx, Sink& out, std::span<const NodeId> path, Message msg) {
  if (path.size() < 2 || path.front() != ctx.self) throw RouteError("route must start at the sending node");
  const auto port = ctx.port_of(path[1]);
  if (port < 0)
    throw RouteError("route hop " + std::to_string(path[1]) + " is not a neighbor of " + std::to_string(ctx.self));
  msg.route.trail.assign(1, ctx.self);
  msg.route.ahead.assign(path.begin() + 2, path.end());
  if constexpr (std::is_same_v<Sink, Outbox>)
    out.send(static_cast<std::size_t>(port), std::move(msg));
  else
    out.push(static_cast<std::size_t>(port), std::move(msg));
}

template <class Sink>
void route_hop(const NodeContext& ctx, Sink& out, Message msg) {
  if (msg.route.ahead.empty()) throw RouteError("message has already arrived");
  const NodeId next = msg.route.ahead.front();
  const auto port = ctx.port_of(next);
  if (port < 0)
    throw RouteError("route hop " + std::to_string(next) + " is not a neighbor of " + std::to_string(ctx.self));
  msg.route.ahead.erase(msg.route.ahead.begin());
  msg.route.trail.push_back(ctx.self);
  if constexpr (std::is_same_v<Sink, Outbox>)
    out.send(static_cast<std::size_t>(port), std::move(msg));
  else
    out.push(static_cast<std::size_t>(port), std::move(msg));
}

}  // namespace

void route_send(const NodeContext& ctx, Outbox& out, std::span<const NodeId> path, Message msg) {
  route_start(ctx, out, path, std::move(msg));
}
void route_send(const NodeContext& ctx, PortQueues& out, std::span<const NodeId> path, Message msg) {
  route_start(ctx, out, path, std::move(msg));
}
void route_forward(const NodeContext& ctx, Outbox& out, Message msg) { route_hop(ctx, out, std::move(msg)); }
void route_forward(const NodeContext& ctx, PortQueues& out, Message msg) { route_hop(ctx, out, std::move(msg)); }

std::vector<NodeId> reverse_path(const NodeContext& ctx, const Message& msg) {
  std::vector<NodeId> path{ctx.self};
  path.insert(path.end(), msg.route.trail.rbegin(), msg.route.trail.rend());
  return path;
}

namespace detail {

std::vector<std::vector<std::uint32_t>> reverse_ports(const Graph& g) {
  std::vector<std::vector<std::uint32_t>> rev(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    const auto nb = g.neighbors(v);
    rev[v].resize(nb.size());
    for (std::size_t p = 0; p < nb.size(); ++p) rev[v][p] = static_cast<std::uint32_t>(g.port_of(nb[p], v));
  }
  return rev;
}

}  // namespace detail

}  // namespace d2
