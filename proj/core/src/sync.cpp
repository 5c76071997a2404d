#include "qchain/sync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qchain/fidelity.hpp"

namespace qchain::sync {

Duration derive_phase_duration(double p_le, double epsg_rate_hz, std::uint32_t q_cells) {
  if (!(p_le > 0.0 && p_le < 1.0)) {
    throw ConfigError("local entanglement probability must lie strictly inside (0, 1)");
  }
  QCHAIN_EXPECTS(epsg_rate_hz > 0.0 && q_cells > 0, "rate and lane count must be positive");
  return Duration::from_seconds(static_cast<double>(q_cells) * -std::log1p(-p_le) / epsg_rate_hz);
}

SlotConfig make_slot_config(const Topology& topo, const std::vector<NodeId>& path,
                            const PhysicalParams& params, double p_le) {
  QCHAIN_EXPECTS(path.size() >= 2, "path needs two end nodes");
  SlotConfig s;
  s.p_le = p_le;
  s.links = static_cast<std::uint32_t>(path.size() - 1);
  s.repeaters = s.links - 1;
  s.lanes = std::numeric_limits<std::uint32_t>::max();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const LinkId l = *topo.link_between(path[i], path[i + 1]);
    s.lanes = std::min(s.lanes, topo.group(path[i], l).size);
  }
  s.t_le = derive_phase_duration(p_le, params.epsg_rate_hz, s.lanes);
  const Duration one_way = topo.path_latency(path.front(), path.back());
  s.t_signal = one_way + one_way;
  s.t_slot = s.t_le + params.bsm_duration + s.t_signal + params.xz_duration;
  return s;
}

std::vector<LaneOutcome> run_slot(const SlotConfig& slot, const PhysicalParams& params,
                                  RngStream& rng, SimTime slot_start) {
  std::vector<LaneOutcome> out(slot.lanes);
  const SimTime bsm_instant = slot_start + slot.t_le + params.bsm_duration;
  const SimTime slot_end = slot_start + slot.t_slot;
  const Fidelity f_init{params.f_init};
  std::vector<SimTime> births(slot.links);

  for (auto& lane : out) {
    bool all_links = true;
    for (std::uint32_t l = 0; l < slot.links; ++l) {
      const bool ok = rng.bernoulli(slot.p_le);
      all_links = all_links && ok;
      // Conditioned on success, a Poisson arrival is uniform over the phase.
      births[l] = slot_start + Duration::from_picos(static_cast<std::int64_t>(
                                   rng.uniform() * static_cast<double>(slot.t_le.picos())));
    }
    if (!all_links) {
      lane.failure = LaneFailure::kLocalEntanglement;
      continue;
    }
    bool all_bsm = true;
    for (std::uint32_t r = 0; r < slot.repeaters; ++r) all_bsm = rng.bernoulli(params.bsm_success_prob) && all_bsm;
    if (!all_bsm) {
      lane.failure = LaneFailure::kBsm;
      continue;
    }

    // Every repeater measures at the same instant; fold the swaps in path order.
    Fidelity composite = dephase(f_init, params.gamma_hz, bsm_instant - births[0]);
    for (std::uint32_t l = 1; l < slot.links; ++l) {
      composite = swap_fidelity(composite, dephase(f_init, params.gamma_hz, bsm_instant - births[l]));
    }
    const double rate = slot.repeaters > 0 ? params.gamma_hz * params.composite_decay_multiplier
                                           : params.gamma_hz;
    lane.fidelity = dephase(composite, rate, slot_end - bsm_instant);
  }
  return out;
}

Protocol::Protocol(Engine& engine, SlotConfig slot, const PhysicalParams& params, RngStream& rng)
    : engine_(&engine), slot_(slot), params_(params), rng_(&rng) {}

void Protocol::start(SimTime horizon) {
  horizon_ = horizon;
  if (engine_->now() + slot_.t_slot > horizon_) return;
  engine_->schedule(Duration::zero(), EventKind::kSlotBoundary, [this] { begin_slot(); },
                    engine_->tracing() ? "slot 0" : std::string{});
}

void Protocol::begin_slot() {
  const SimTime start = engine_->now();
  auto outcomes = run_slot(slot_, params_, *rng_, start);
  ++stats_.slots;
  stats_.attempts += outcomes.size();

  engine_->schedule(slot_.t_slot, EventKind::kXzComplete, [this, outcomes = std::move(outcomes)] {
    for (const auto& o : outcomes) {
      switch (o.failure) {
        case LaneFailure::kNone:
          ++stats_.successes;
          if (on_delivery_) on_delivery_(o.fidelity, engine_->now());
          break;
        case LaneFailure::kLocalEntanglement: ++stats_.failures_le; break;
        case LaneFailure::kBsm: ++stats_.failures_bsm; break;
      }
    }
  });

  if (start + slot_.t_slot + slot_.t_slot <= horizon_) {
    std::string detail;
    if (engine_->tracing()) detail = "slot " + std::to_string(stats_.slots);
    engine_->schedule(slot_.t_slot, EventKind::kSlotBoundary, [this] { begin_slot(); },
                      std::move(detail));
  }
}

}  // namespace qchain::sync
