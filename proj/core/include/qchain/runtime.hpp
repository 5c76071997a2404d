#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qchain/hopper.hpp"
#include "qchain/physical.hpp"
#include "qchain/types.hpp"

namespace qchain {

enum class ProtocolKind : std::uint8_t { kHopper, kSync };

std::string_view to_string(ProtocolKind p);

/// Closed-loop application: always exactly one outstanding ebit request.
struct Application {
  std::uint32_t id = 0;
  NodeId src{};
  PortId src_port{};
  NodeId dst{};
  PortId dst_port{};
  std::uint64_t ebits_completed = 0;
  bool outstanding = false;
};

/// Applications between the two end nodes of a chain, one port pair each.
class Workload {
 public:
  Workload(hopper::Protocol& protocol, NodeId src, NodeId dst, std::uint32_t n_applications);

  /// Issues the first request of every application.
  void start();

  /// The ebit reached both ends: count it and issue the next request.
  void on_established(std::uint32_t app_id, Fidelity fidelity, SimTime t);

  /// Stop issuing new requests.
  void stop() { running_ = false; }

  [[nodiscard]] const std::vector<Application>& applications() const { return apps_; }
  [[nodiscard]] std::uint64_t total_completed() const;

 private:
  hopper::Protocol* protocol_;
  std::vector<Application> apps_;
  bool running_ = false;
};

/// Per-replication results.
struct RunMetrics {
  double duration_s = 0.0;
  double throughput = 0.0;  ///< successes / duration_s
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t failures_bsm = 0;
  std::uint64_t failures_stale = 0;
  std::uint64_t failures_le = 0;
  std::uint64_t abandoned = 0;

  double fidelity_mean = 0.0;  ///< NaN without deliveries.
  double fidelity_min = 0.0;
  std::uint64_t below_entanglement = 0;  ///< Deliveries under fidelity 0.5.

  std::uint64_t generated = 0;  ///< Pairs generated, summed over links.
  std::uint64_t stored = 0;     ///< Summed over both endpoints of every link.
  std::uint64_t overwritten = 0;
  std::uint64_t dropped = 0;
  std::vector<LinkCounters> per_link;  ///< Two entries per link: Master side, Slave side.

  double wait_mean_s = 0.0;
  double wait_max_s = 0.0;
  double attempts_per_success = 0.0;

  std::uint64_t apps_completed = 0;
  std::uint64_t orphan_used = 0;
  std::uint64_t duplicate_consumption = 0;
  std::uint64_t live_after_drain = 0;

  std::vector<double> fidelities;  ///< Every counted delivery, in delivery order.
};

struct ReplicationSpec {
  ProtocolKind protocol = ProtocolKind::kHopper;
  std::uint32_t n_repeaters = 3;
  double link_length_m = 5.0e6;
  std::uint32_t cells_per_node = 50;
  std::uint32_t n_applications = 1;
  double p_le = 0.5;  ///< Sync only.
  PhysicalParams params;
  Duration duration = Duration::from_seconds(60.0);
  std::uint64_t seed = 1;
  hopper::Options hopper;
};

struct TraceSinks {
  std::ostream* engine_trace = nullptr;
  std::ostream* message_dump = nullptr;
};

/// Runs one isolated replication, drains it and audits the memories.
RunMetrics run_replication(const ReplicationSpec& spec, const TraceSinks& sinks = {});

/// Mean with a Student-t 95% confidence half-width.
struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> ci95;  ///< Absent with fewer than two samples.
};

Summary aggregate(std::span<const double> values);

/// Two-sided 97.5% quantile of Student's t with `dof` degrees of freedom.
double student_t_975(std::size_t dof);

}  // namespace qchain
