#include "qchain/physical.hpp"

#include <string>

#include "qchain/fidelity.hpp"

namespace qchain {

std::string_view to_string(CellState s) {
  switch (s) {
    case CellState::kEmpty: return "Empty";
    case CellState::kValid: return "Valid";
    case CellState::kUsed: return "Used";
  }
  return "?";
}

QuantumMemory::QuantumMemory(const Topology& topo) : topo_(&topo) {
  cells_.resize(topo.node_count());
  for (std::size_t n = 0; n < topo.node_count(); ++n) {
    cells_[n].resize(topo.cells_at(NodeId{static_cast<std::uint32_t>(n)}));
  }
}

AbsorbOutcome QuantumMemory::absorb(NodeId node, LinkId link, const StoredHalf& half) {
  const CellGroup& g = topo_->group(node, link);
  auto& cells = cells_.at(to_index(node));

  for (std::uint32_t i = g.first; i < g.first + g.size; ++i) {
    if (cells[i].state == CellState::kEmpty) {
      cells[i].state = CellState::kValid;
      cells[i].half = half;
      return {AbsorbOutcome::Kind::kStored, i, 0};
    }
  }

  std::optional<std::uint32_t> victim;
  for (std::uint32_t i = g.first; i < g.first + g.size; ++i) {
    if (cells[i].state != CellState::kValid) continue;
    if (!victim || cells[i].half->birth < cells[*victim].half->birth ||
        (cells[i].half->birth == cells[*victim].half->birth &&
         cells[i].half->pair_seq < cells[*victim].half->pair_seq)) {
      victim = i;
    }
  }
  if (victim) {
    const std::uint64_t old = cells[*victim].half->pair_seq;
    cells[*victim].half = half;
    return {AbsorbOutcome::Kind::kOverwrote, *victim, old};
  }
  return {AbsorbOutcome::Kind::kDropped, 0, 0};
}

LockOutcome QuantumMemory::lock(CellRef c, std::uint64_t expected_pair_seq, std::uint64_t owner) {
  QCHAIN_EXPECTS(owner != 0, "lock owner must be non-zero");
  MemoryCell& cell = at(c);
  if (cell.state != CellState::kValid) return LockOutcome::kNotValid;
  if (cell.half->pair_seq != expected_pair_seq) return LockOutcome::kStaleMismatch;
  cell.state = CellState::kUsed;
  cell.owner = owner;
  return LockOutcome::kLocked;
}

void QuantumMemory::free(CellRef c) {
  MemoryCell& cell = at(c);
  QCHAIN_EXPECTS(cell.state != CellState::kEmpty,
                 "free of Empty cell " + topo_->name(c.node) + "-" + std::to_string(c.index));
  cell = MemoryCell{};
}

std::optional<std::uint32_t> QuantumMemory::youngest_valid(NodeId node, LinkId link) const {
  const CellGroup& g = topo_->group(node, link);
  const auto& cells = cells_.at(to_index(node));
  std::optional<std::uint32_t> best;
  for (std::uint32_t i = g.first; i < g.first + g.size; ++i) {
    if (cells[i].state != CellState::kValid) continue;
    if (!best || cells[i].half->birth > cells[*best].half->birth ||
        (cells[i].half->birth == cells[*best].half->birth &&
         cells[i].half->pair_seq > cells[*best].half->pair_seq)) {
      best = i;
    }
  }
  return best;
}

std::optional<std::uint32_t> QuantumMemory::find_pair(NodeId node, LinkId link,
                                                      std::uint64_t pair_seq) const {
  const CellGroup& g = topo_->group(node, link);
  const auto& cells = cells_.at(to_index(node));
  for (std::uint32_t i = g.first; i < g.first + g.size; ++i) {
    if (cells[i].half && cells[i].half->pair_seq == pair_seq) return i;
  }
  return std::nullopt;
}

std::size_t QuantumMemory::used_count() const {
  std::size_t n = 0;
  for (const auto& node : cells_) {
    for (const auto& c : node) n += c.state == CellState::kUsed ? 1 : 0;
  }
  return n;
}

Duration next_generation(const Link& link, RngStream& rng) {
  QCHAIN_EXPECTS(link.epsg_rate_hz > 0.0, "EPSG rate must be positive");
  return Duration::from_seconds(rng.exponential(link.epsg_rate_hz));
}

Duration quantum_arrival_latency(const Link& link, double signal_speed_mps) {
  return Duration::from_seconds(0.5 * link.length_m / signal_speed_mps);
}

BsmResult attempt_bsm(Fidelity f_left, Fidelity f_right, double success_prob, RngStream& rng) {
  if (!rng.bernoulli(success_prob)) return BsmResult{false, 0, Fidelity{0.25}};
  const auto bits = static_cast<std::uint8_t>(rng.uniform_below(4));
  return BsmResult{true, bits, swap_fidelity(f_left, f_right)};
}

EpsgDriver::EpsgDriver(Engine& engine, QuantumMemory& memory, RngStream& rng,
                       const PhysicalParams& params)
    : engine_(&engine), memory_(&memory), rng_(&rng), params_(params) {
  const std::size_t n_links = memory.topology().links().size();
  seq_.assign(n_links, 0);
  counters_.assign(2 * n_links, LinkCounters{});
}

void EpsgDriver::start() {
  running_ = true;
  for (const Link& l : memory_->topology().links()) {
    schedule_arrival(l.id, quantum_arrival_latency(l, params_.signal_speed_mps) +
                               next_generation(l, *rng_));
  }
}

void EpsgDriver::schedule_arrival(LinkId link, Duration delay) {
  std::string detail;
  if (engine_->tracing()) detail = "link=" + std::to_string(to_index(link));
  engine_->schedule(
      delay, EventKind::kPairArrival,
      [this, link] {
        if (!running_) return;
        deliver_pair(link);
        // Arrivals are generation instants shifted by a constant flight time,
        // so they form the same Poisson process.
        schedule_arrival(link, next_generation(memory_->topology().link(link), *rng_));
      },
      std::move(detail));
}

void EpsgDriver::deliver_pair(LinkId link) {
  const Link& l = memory_->topology().link(link);
  const StoredHalf half{++seq_.at(to_index(link)), engine_->now(), Fidelity{params_.f_init}};
  for (const auto& [node, side] : {std::pair{l.upstream, Role::kMaster},
                                   std::pair{l.downstream, Role::kSlave}}) {
    LinkCounters& c = counters_.at(2 * to_index(link) + (side == Role::kMaster ? 0 : 1));
    ++c.generated;
    const AbsorbOutcome out = memory_->absorb(node, link, half);
    switch (out.kind) {
      case AbsorbOutcome::Kind::kStored: ++c.stored; break;
      case AbsorbOutcome::Kind::kOverwrote: ++c.overwritten; break;
      case AbsorbOutcome::Kind::kDropped: ++c.dropped; break;
    }
    if (hook_) hook_(node, link, out);
  }
}

}  // namespace qchain
