#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qchain/types.hpp"

namespace qchain {

enum class Role : std::uint8_t { kMaster, kSlave };

std::string_view to_string(Role role);

struct Link {
  LinkId id{};
  NodeId upstream{};    ///< Master side for this link.
  NodeId downstream{};  ///< Slave side for this link.
  double length_m = 0.0;
  double epsg_rate_hz = 0.0;
};

struct CellRef {
  NodeId node{};
  std::uint32_t index = 0;
  auto operator<=>(const CellRef&) const = default;
};

/// Binding of one memory cell to a (link, role) group. `mirror` is empty for
/// cells left over when the neighbouring node grants the link fewer cells.
struct CellAssignment {
  NodeId node{};
  std::uint32_t cell_index = 0;
  LinkId link{};
  Role role = Role::kMaster;
  std::optional<CellRef> mirror;
};

/// A link incident to a node together with the role the node plays on it.
/// Ordered upstream first.
struct IncidentLink {
  LinkId link{};
  Role role = Role::kMaster;
};

/// Splits `cells` evenly over the incident links; group sizes differ by at
/// most one and the first links in `incident` (the upstream side) receive the
/// extra cells. Cells are numbered group by group in the order given.
std::vector<CellAssignment> partition_memory(NodeId node, std::span<const IncidentLink> incident,
                                             std::uint32_t cells);

/// Contiguous range of cells at one node serving one link.
struct CellGroup {
  LinkId link{};
  Role role = Role::kMaster;
  std::uint32_t first = 0;
  std::uint32_t size = 0;      ///< Mirrored (usable) cells.
  std::uint32_t assigned = 0;  ///< Cells handed out by partition_memory.
};

/// Immutable network description: nodes, links and memory layout.
class Topology {
 public:
  [[nodiscard]] std::size_t node_count() const { return node_names_.size(); }
  [[nodiscard]] std::span<const Link> links() const { return links_; }
  [[nodiscard]] const Link& link(LinkId id) const { return links_.at(to_index(id)); }
  [[nodiscard]] const std::string& name(NodeId n) const { return node_names_.at(to_index(n)); }
  [[nodiscard]] std::uint32_t cells_at(NodeId n) const {
    return static_cast<std::uint32_t>(assignments_.at(to_index(n)).size());
  }
  [[nodiscard]] std::span<const CellAssignment> assignments(NodeId n) const {
    return assignments_.at(to_index(n));
  }
  [[nodiscard]] const CellAssignment& assignment(CellRef c) const {
    return assignments_.at(to_index(c.node)).at(c.index);
  }
  [[nodiscard]] std::optional<CellRef> mirror(CellRef c) const { return assignment(c).mirror; }

  /// Group of `node` on `link`; throws std::out_of_range if not incident.
  [[nodiscard]] const CellGroup& group(NodeId node, LinkId link) const;
  [[nodiscard]] std::span<const CellGroup> groups(NodeId node) const {
    return groups_.at(to_index(node));
  }

  [[nodiscard]] std::optional<LinkId> link_between(NodeId a, NodeId b) const;
  [[nodiscard]] std::vector<NodeId> neighbours(NodeId n) const;

  /// Hop-count minimal path from src to dst inclusive; throws PathError.
  [[nodiscard]] std::vector<NodeId> shortest_path(NodeId src, NodeId dst) const;

  [[nodiscard]] Duration classical_latency(LinkId link) const;
  /// One-way classical latency along the shortest path between two nodes.
  [[nodiscard]] Duration path_latency(NodeId from, NodeId to) const;

  [[nodiscard]] double signal_speed() const { return signal_speed_mps_; }

  /// First and last nodes of a chain built by build_chain.
  [[nodiscard]] NodeId head() const { return NodeId{0}; }
  [[nodiscard]] NodeId tail() const { return NodeId{static_cast<std::uint32_t>(node_count() - 1)}; }

 private:
  friend Topology build_chain(std::uint32_t, double, std::uint32_t, const PhysicalParams&);

  std::vector<std::string> node_names_;
  std::vector<Link> links_;
  std::vector<std::vector<CellAssignment>> assignments_;
  std::vector<std::vector<CellGroup>> groups_;
  std::vector<Duration> latency_;  ///< node_count^2 table, row-major.
  double signal_speed_mps_ = 3.0e8;
};

/// Chain A - R1 - ... - Rn - B with one EPSG per link. Each link's usable pool
/// is the smaller of the two endpoint shares so that Master and Slave cells
/// pair up one to one.
Topology build_chain(std::uint32_t n_repeaters, double link_length_m, std::uint32_t cells_per_node,
                     const PhysicalParams& params);

}  // namespace qchain
