#include "qchain/network.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace qchain {

std::string_view to_string(Role role) { return role == Role::kMaster ? "M" : "S"; }

std::vector<CellAssignment> partition_memory(NodeId node, std::span<const IncidentLink> incident,
                                             std::uint32_t cells) {
  if (incident.empty()) return {};
  const auto k = static_cast<std::uint32_t>(incident.size());
  if (cells < k) {
    throw ConfigError("node " + std::to_string(to_index(node)) + " has " + std::to_string(cells) +
                      " memory cells but " + std::to_string(k) +
                      " incident links; every link needs at least one cell");
  }
  const std::uint32_t base = cells / k;
  const std::uint32_t extra = cells % k;

  std::vector<CellAssignment> out;
  out.reserve(cells);
  std::uint32_t index = 0;
  for (std::uint32_t g = 0; g < k; ++g) {
    const std::uint32_t size = base + (g < extra ? 1 : 0);
    for (std::uint32_t i = 0; i < size; ++i) {
      out.push_back(CellAssignment{node, index++, incident[g].link, incident[g].role, std::nullopt});
    }
  }
  return out;
}

const CellGroup& Topology::group(NodeId node, LinkId link) const {
  for (const auto& g : groups_.at(to_index(node))) {
    if (g.link == link) return g;
  }
  throw std::out_of_range("link " + std::to_string(to_index(link)) + " not incident to node " +
                          name(node));
}

std::optional<LinkId> Topology::link_between(NodeId a, NodeId b) const {
  for (const auto& l : links_) {
    if ((l.upstream == a && l.downstream == b) || (l.upstream == b && l.downstream == a))
      return l.id;
  }
  return std::nullopt;
}

std::vector<NodeId> Topology::neighbours(NodeId n) const {
  std::vector<NodeId> out;
  for (const auto& l : links_) {
    if (l.upstream == n) out.push_back(l.downstream);
    if (l.downstream == n) out.push_back(l.upstream);
  }
  return out;
}

std::vector<NodeId> Topology::shortest_path(NodeId src, NodeId dst) const {
  const std::size_t n = node_count();
  if (to_index(src) >= n || to_index(dst) >= n) throw PathError("unknown node");
  if (src == dst) throw PathError("source and destination coincide");

  std::vector<std::optional<NodeId>> parent(n);
  std::vector<bool> seen(n, false);
  std::deque<NodeId> frontier{src};
  seen[to_index(src)] = true;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    if (u == dst) break;
    auto next = neighbours(u);
    std::sort(next.begin(), next.end());
    for (NodeId v : next) {
      if (seen[to_index(v)]) continue;
      seen[to_index(v)] = true;
      parent[to_index(v)] = u;
      frontier.push_back(v);
    }
  }
  if (!seen[to_index(dst)]) throw PathError("no path from " + name(src) + " to " + name(dst));

  std::vector<NodeId> path{dst};
  while (path.back() != src) path.push_back(*parent[to_index(path.back())]);
  std::reverse(path.begin(), path.end());
  return path;
}

Duration Topology::classical_latency(LinkId id) const {
  return Duration::from_seconds(link(id).length_m / signal_speed_mps_);
}

Duration Topology::path_latency(NodeId from, NodeId to) const {
  if (from == to) return Duration::zero();
  if (!latency_.empty()) return latency_.at(to_index(from) * node_count() + to_index(to));
  const auto path = shortest_path(from, to);
  Duration total = Duration::zero();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    total += classical_latency(*link_between(path[i], path[i + 1]));
  }
  return total;
}

Topology build_chain(std::uint32_t n_repeaters, double link_length_m, std::uint32_t cells_per_node,
                     const PhysicalParams& params) {
  if (!(link_length_m >= 0.0)) throw ConfigError("link length must be non-negative");
  const std::uint32_t n_nodes = n_repeaters + 2;

  Topology topo;
  topo.signal_speed_mps_ = params.signal_speed_mps;
  topo.node_names_.reserve(n_nodes);
  topo.node_names_.emplace_back("A");
  for (std::uint32_t r = 1; r <= n_repeaters; ++r) topo.node_names_.push_back("R" + std::to_string(r));
  topo.node_names_.emplace_back("B");

  for (std::uint32_t i = 0; i + 1 < n_nodes; ++i) {
    topo.links_.push_back(Link{LinkId{i}, NodeId{i}, NodeId{i + 1}, link_length_m,
                               params.epsg_rate_hz});
  }

  topo.assignments_.resize(n_nodes);
  topo.groups_.resize(n_nodes);
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    std::vector<IncidentLink> incident;
    if (i > 0) incident.push_back({LinkId{i - 1}, Role::kSlave});
    if (i + 1 < n_nodes) incident.push_back({LinkId{i}, Role::kMaster});
    try {
      topo.assignments_[i] = partition_memory(NodeId{i}, incident, cells_per_node);
    } catch (const ConfigError& e) {
      throw ConfigError("node " + topo.node_names_[i] + ": " + e.what());
    }
    for (const auto& a : topo.assignments_[i]) {
      auto& groups = topo.groups_[i];
      if (groups.empty() || groups.back().link != a.link) {
        groups.push_back(CellGroup{a.link, a.role, a.cell_index, 0, 0});
      }
      ++groups.back().assigned;
    }
  }

  // Pair Master cells with Slave cells link by link, group-local index k to k.
  auto group_of = [&topo](NodeId n, LinkId id) -> CellGroup& {
    auto& groups = topo.groups_[to_index(n)];
    return *std::find_if(groups.begin(), groups.end(),
                         [id](const CellGroup& g) { return g.link == id; });
  };
  for (const auto& l : topo.links_) {
    auto& up = group_of(l.upstream, l.id);
    auto& down = group_of(l.downstream, l.id);
    const std::uint32_t pool = std::min(up.assigned, down.assigned);
    up.size = pool;
    down.size = pool;
    for (std::uint32_t k = 0; k < pool; ++k) {
      const CellRef m{l.upstream, up.first + k};
      const CellRef s{l.downstream, down.first + k};
      topo.assignments_[to_index(m.node)][m.index].mirror = s;
      topo.assignments_[to_index(s.node)][s.index].mirror = m;
    }
  }

  std::vector<Duration> latency(std::size_t{n_nodes} * n_nodes);
  for (std::uint32_t a = 0; a < n_nodes; ++a) {
    for (std::uint32_t b = 0; b < n_nodes; ++b) {
      latency[std::size_t{a} * n_nodes + b] = topo.path_latency(NodeId{a}, NodeId{b});
    }
  }
  topo.latency_ = std::move(latency);
  return topo;
}

}  // namespace qchain
