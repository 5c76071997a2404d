#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qchain/engine.hpp"
#include "qchain/network.hpp"
#include "qchain/rng.hpp"
#include "qchain/types.hpp"

namespace qchain::sync {

/// Phase layout of one time slot.
struct SlotConfig {
  double p_le = 0.0;           ///< Per-lane local entanglement success probability.
  Duration t_le;               ///< Local entanglement phase.
  Duration t_signal;           ///< Classical round trip between the end nodes.
  Duration t_slot;             ///< t_le + bsm + t_signal + xz.
  std::uint32_t lanes = 1;     ///< Memory cells per link working in parallel.
  std::uint32_t links = 1;     ///< L
  std::uint32_t repeaters = 0; ///< R
};

/// Local entanglement phase long enough for each of `q_cells` lanes to get a
/// pair with probability p_le when the link rate is split evenly across them:
/// q_cells * -ln(1 - p_le) / rate.
[[nodiscard]] Duration derive_phase_duration(double p_le, double epsg_rate_hz,
                                             std::uint32_t q_cells);

/// Slot layout for a fixed path. Lanes are the smallest per-link cell pool.
[[nodiscard]] SlotConfig make_slot_config(const Topology& topo, const std::vector<NodeId>& path,
                                          const PhysicalParams& params, double p_le);

enum class LaneFailure : std::uint8_t { kNone, kLocalEntanglement, kBsm };

struct LaneOutcome {
  LaneFailure failure = LaneFailure::kNone;
  Fidelity fidelity{0.25};  ///< End-to-end fidelity at slot end, on success.
  [[nodiscard]] bool success() const { return failure == LaneFailure::kNone; }
};

/// Plays one slot starting at `slot_start` on every lane.
[[nodiscard]] std::vector<LaneOutcome> run_slot(const SlotConfig& slot,
                                                const PhysicalParams& params, RngStream& rng,
                                                SimTime slot_start);

struct Stats {
  std::uint64_t slots = 0;
  std::uint64_t attempts = 0;  ///< lanes x slots
  std::uint64_t successes = 0;
  std::uint64_t failures_le = 0;
  std::uint64_t failures_bsm = 0;
};

/// Drives consecutive slots on the engine until no further slot fits in the horizon.
class Protocol {
 public:
  using DeliveryHook = std::function<void(Fidelity, SimTime)>;

  Protocol(Engine& engine, SlotConfig slot, const PhysicalParams& params, RngStream& rng);

  void set_delivery_hook(DeliveryHook hook) { on_delivery_ = std::move(hook); }
  void start(SimTime horizon);

  [[nodiscard]] const Stats& stats() const { return stats_; }
  [[nodiscard]] const SlotConfig& slot() const { return slot_; }

 private:
  void begin_slot();

  Engine* engine_;
  SlotConfig slot_;
  PhysicalParams params_;
  RngStream* rng_;
  SimTime horizon_;
  DeliveryHook on_delivery_;
  Stats stats_;
};

}  // namespace qchain::sync
