#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qchain/engine.hpp"
#include "qchain/network.hpp"
#include "qchain/rng.hpp"
#include "qchain/types.hpp"

namespace qchain {

enum class CellState : std::uint8_t { kEmpty, kValid, kUsed };

std::string_view to_string(CellState s);

/// The half of an EPR pair held by one memory cell.
struct StoredHalf {
  std::uint64_t pair_seq = 0;
  SimTime birth;
  Fidelity f_init;
};

struct MemoryCell {
  CellState state = CellState::kEmpty;
  std::optional<StoredHalf> half;
  /// Attempt holding the lock while Used; 0 otherwise.
  std::uint64_t owner = 0;
};

struct AbsorbOutcome {
  enum class Kind : std::uint8_t { kStored, kOverwrote, kDropped };
  Kind kind = Kind::kDropped;
  std::uint32_t cell = 0;
  std::uint64_t old_pair_seq = 0;
};

enum class LockOutcome : std::uint8_t { kLocked, kStaleMismatch, kNotValid };

/// Per-endpoint arrival accounting for one link.
struct LinkCounters {
  std::uint64_t generated = 0;
  std::uint64_t stored = 0;
  std::uint64_t overwritten = 0;
  std::uint64_t dropped = 0;
};

/// Memory cells of every node in a topology, governed by the
/// Empty -> Valid -> Used -> Empty state machine.
class QuantumMemory {
 public:
  explicit QuantumMemory(const Topology& topo);

  /// Stores an arriving half in the group of `node` on `link`: lowest-index
  /// Empty cell, else the Valid cell with the oldest pair, else dropped.
  AbsorbOutcome absorb(NodeId node, LinkId link, const StoredHalf& half);

  /// Valid -> Used iff the cell holds `expected_pair_seq`.
  LockOutcome lock(CellRef cell, std::uint64_t expected_pair_seq, std::uint64_t owner);

  /// Used or Valid -> Empty. Freeing an Empty cell aborts.
  void free(CellRef cell);

  /// Valid cell in the group holding the most recently born pair.
  [[nodiscard]] std::optional<std::uint32_t> youngest_valid(NodeId node, LinkId link) const;
  /// Cell in the group currently holding `pair_seq`, in any non-Empty state.
  [[nodiscard]] std::optional<std::uint32_t> find_pair(NodeId node, LinkId link,
                                                       std::uint64_t pair_seq) const;

  [[nodiscard]] const MemoryCell& cell(CellRef c) const {
    return cells_.at(to_index(c.node)).at(c.index);
  }
  [[nodiscard]] const Topology& topology() const { return *topo_; }

  /// Number of Used cells across every node.
  [[nodiscard]] std::size_t used_count() const;

 private:
  MemoryCell& at(CellRef c) { return cells_.at(to_index(c.node)).at(c.index); }

  const Topology* topo_;
  std::vector<std::vector<MemoryCell>> cells_;
};

/// Exponential inter-generation time of the link's EPSG.
[[nodiscard]] Duration next_generation(const Link& link, RngStream& rng);

/// One-way photon flight time from the mid-link EPSG to either endpoint.
[[nodiscard]] Duration quantum_arrival_latency(const Link& link, double signal_speed_mps);

struct BsmResult {
  bool success = false;
  std::uint8_t bits = 0;  ///< Two classical bits, valid on success.
  Fidelity f_out{0.25};
};

/// Bell-state measurement over two halves already dephased to the
/// measurement instant.
[[nodiscard]] BsmResult attempt_bsm(Fidelity f_left, Fidelity f_right, double success_prob,
                                    RngStream& rng);

/// Drives every link's EPSG: Poisson generation, symmetric arrival at both
/// endpoints, and absorption into the Master and Slave groups of the link.
class EpsgDriver {
 public:
  using AbsorbHook = std::function<void(NodeId, LinkId, const AbsorbOutcome&)>;

  EpsgDriver(Engine& engine, QuantumMemory& memory, RngStream& rng, const PhysicalParams& params);

  void set_absorb_hook(AbsorbHook hook) { hook_ = std::move(hook); }

  /// Schedules the first arrival on every link.
  void start();
  /// Arrivals already scheduled are discarded when they fire.
  void stop() { running_ = false; }

  /// Delivers one pair to both endpoints of `link` at the current instant.
  void deliver_pair(LinkId link);

  [[nodiscard]] std::uint64_t pair_counter(LinkId link) const { return seq_.at(to_index(link)); }
  [[nodiscard]] const LinkCounters& counters(LinkId link, Role side) const {
    return counters_.at(2 * to_index(link) + (side == Role::kMaster ? 0 : 1));
  }

 private:
  void schedule_arrival(LinkId link, Duration delay);

  Engine* engine_;
  QuantumMemory* memory_;
  RngStream* rng_;
  PhysicalParams params_;
  AbsorbHook hook_;
  bool running_ = false;
  std::vector<std::uint64_t> seq_;
  std::vector<LinkCounters> counters_;
};

}  // namespace qchain
