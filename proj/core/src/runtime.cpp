#include "qchain/runtime.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "qchain/engine.hpp"
#include "qchain/network.hpp"
#include "qchain/rng.hpp"
#include "qchain/sync.hpp"

namespace qchain {

std::string_view to_string(ProtocolKind p) {
  return p == ProtocolKind::kHopper ? "hopper" : "sync";
}

Workload::Workload(hopper::Protocol& protocol, NodeId src, NodeId dst,
                   std::uint32_t n_applications)
    : protocol_(&protocol) {
  apps_.reserve(n_applications);
  for (std::uint32_t i = 0; i < n_applications; ++i) {
    apps_.push_back(Application{i, src, PortId{i}, dst, PortId{i}, 0, false});
  }
}

void Workload::start() {
  running_ = true;
  for (auto& app : apps_) {
    app.outstanding = true;
    protocol_->request({app.id, app.src, app.src_port, app.dst, app.dst_port});
  }
}

void Workload::on_established(std::uint32_t app_id, Fidelity /*fidelity*/, SimTime /*t*/) {
  Application& app = apps_.at(app_id);
  QCHAIN_EXPECTS(app.outstanding, "delivery to an application with no outstanding request");
  ++app.ebits_completed;
  app.outstanding = false;
  if (!running_) return;
  app.outstanding = true;
  protocol_->request({app.id, app.src, app.src_port, app.dst, app.dst_port});
}

std::uint64_t Workload::total_completed() const {
  return std::accumulate(apps_.begin(), apps_.end(), std::uint64_t{0},
                         [](std::uint64_t s, const Application& a) { return s + a.ebits_completed; });
}

namespace {

void finish_fidelity(RunMetrics& m) {
  if (m.fidelities.empty()) {
    m.fidelity_mean = std::numeric_limits<double>::quiet_NaN();
    m.fidelity_min = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  m.fidelity_mean = std::accumulate(m.fidelities.begin(), m.fidelities.end(), 0.0) /
                    static_cast<double>(m.fidelities.size());
  m.fidelity_min = *std::min_element(m.fidelities.begin(), m.fidelities.end());
  m.below_entanglement = static_cast<std::uint64_t>(
      std::count_if(m.fidelities.begin(), m.fidelities.end(),
                    [](double f) { return f < Fidelity::kEntanglementThreshold; }));
}

RunMetrics run_hopper(const ReplicationSpec& spec, const TraceSinks& sinks) {
  const Topology topo =
      build_chain(spec.n_repeaters, spec.link_length_m, spec.cells_per_node, spec.params);
  Engine engine;
  engine.set_trace(sinks.engine_trace);
  RngStream rng(spec.seed);
  QuantumMemory memory(topo);
  EpsgDriver epsg(engine, memory, rng, spec.params);
  hopper::Protocol protocol(engine, topo, memory, rng, spec.params, spec.hopper);
  protocol.set_message_dump(sinks.message_dump);
  Workload workload(protocol, topo.head(), topo.tail(), spec.n_applications);

  RunMetrics m;
  m.duration_s = spec.duration.seconds();
  epsg.set_absorb_hook([&protocol](NodeId n, LinkId l, const AbsorbOutcome& o) {
    protocol.on_absorbed(n, l, o);
  });
  protocol.set_listener(hopper::Listener{
      [&m](const hopper::EbitAttempt& a) { m.fidelities.push_back(a.delivered_fidelity->value()); },
      [&workload](const hopper::EbitAttempt& a) {
        workload.on_established(a.app_id, *a.delivered_fidelity, *a.delivered_at);
      }});

  epsg.start();
  workload.start();
  const SimTime horizon = SimTime{} + spec.duration;
  engine.run_until(horizon);

  // Drain: no new pairs or requests; let in-flight signalling settle.
  workload.stop();
  epsg.stop();
  protocol.begin_drain();
  engine.set_trace(nullptr);
  protocol.set_message_dump(nullptr);
  engine.run_to_completion();

  const auto& s = protocol.stats();
  m.attempts = s.attempts;
  m.successes = s.successes;
  m.failures_bsm = s.failures_bsm;
  m.failures_stale = s.failures_stale;
  m.abandoned = s.abandoned;
  m.wait_mean_s = s.waits > 0 ? s.wait_total_s / static_cast<double>(s.waits) : 0.0;
  m.wait_max_s = s.wait_max_s;
  m.duplicate_consumption = s.duplicate_consumption;
  m.orphan_used = memory.used_count();
  m.live_after_drain = protocol.live_attempts();
  m.apps_completed = workload.total_completed();

  for (const Link& l : topo.links()) {
    for (Role side : {Role::kMaster, Role::kSlave}) {
      const LinkCounters& c = epsg.counters(l.id, side);
      m.per_link.push_back(c);
      m.stored += c.stored;
      m.overwritten += c.overwritten;
      m.dropped += c.dropped;
    }
    m.generated += epsg.pair_counter(l.id);
  }
  return m;
}

RunMetrics run_sync(const ReplicationSpec& spec, const TraceSinks& sinks) {
  const Topology topo =
      build_chain(spec.n_repeaters, spec.link_length_m, spec.cells_per_node, spec.params);
  Engine engine;
  engine.set_trace(sinks.engine_trace);
  RngStream rng(spec.seed);
  const auto path = topo.shortest_path(topo.head(), topo.tail());
  sync::Protocol protocol(engine, sync::make_slot_config(topo, path, spec.params, spec.p_le),
                          spec.params, rng);

  RunMetrics m;
  m.duration_s = spec.duration.seconds();
  protocol.set_delivery_hook([&m](Fidelity f, SimTime) { m.fidelities.push_back(f.value()); });
  const SimTime horizon = SimTime{} + spec.duration;
  protocol.start(horizon);
  engine.run_until(horizon);

  const auto& s = protocol.stats();
  m.attempts = s.attempts;
  m.successes = s.successes;
  m.failures_le = s.failures_le;
  m.failures_bsm = s.failures_bsm;
  m.apps_completed = s.successes;
  return m;
}

}  // namespace

RunMetrics run_replication(const ReplicationSpec& spec, const TraceSinks& sinks) {
  spec.params.validate();
  RunMetrics m = spec.protocol == ProtocolKind::kHopper ? run_hopper(spec, sinks)
                                                         : run_sync(spec, sinks);
  finish_fidelity(m);
  m.throughput = static_cast<double>(m.successes) / m.duration_s;
  m.attempts_per_success = m.successes > 0
                               ? static_cast<double>(m.attempts) / static_cast<double>(m.successes)
                               : std::numeric_limits<double>::quiet_NaN();
  return m;
}

double student_t_975(std::size_t dof) {
  QCHAIN_EXPECTS(dof >= 1, "Student t needs at least one degree of freedom");
  const boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

Summary aggregate(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.ci95 = student_t_975(s.n - 1) * s.stddev / std::sqrt(static_cast<double>(s.n));
  return s;
}

}  // namespace qchain
