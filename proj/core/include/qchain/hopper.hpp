#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qchain/engine.hpp"
#include "qchain/network.hpp"
#include "qchain/physical.hpp"
#include "qchain/rng.hpp"
#include "qchain/types.hpp"

namespace qchain::hopper {

/// Names one ebit establishment attempt network-wide.
struct FiveTuple {
  NodeId src_node{};
  PortId src_port{};
  NodeId dst_node{};
  PortId dst_port{};
  std::uint64_t attempt_id = 0;

  auto operator<=>(const FiveTuple&) const = default;
};

std::string to_string(const FiveTuple& t);

/// Slave cell the receiver must lock: its index plus the pair it should hold.
struct CellDesignation {
  std::uint32_t cell_index = 0;
  std::uint64_t pair_seq = 0;
};

struct EsReq {
  FiveTuple tuple;
  std::vector<NodeId> path;  ///< Remaining nodes; path.front() is the receiver.
  CellDesignation upstream_cell;
  std::vector<std::uint8_t> corrections;  ///< 2-bit BSM outcomes in path order.
};

struct EsRemComp {
  FiveTuple tuple;
  SimTime completion_time;
  Fidelity end_to_end_fidelity;
};

enum class FailureCause : std::uint8_t { kBsm, kStaleCell, kAborted };
std::string_view to_string(FailureCause c);

struct EsRemFail {
  FiveTuple tuple;
  NodeId failing_node{};
  FailureCause cause = FailureCause::kBsm;
};

struct EsFree {
  FiveTuple tuple;
  CellDesignation cell;
};

using Message = std::variant<EsReq, EsRemComp, EsRemFail, EsFree>;

/// How a node maps an incoming designation onto its own Slave cells.
enum class SlaveResolution : std::uint8_t {
  /// Use the designated cell only; a different pair there is a stale failure.
  kByIndex,
  /// Use the designated cell if it holds the pair, else whichever group cell
  /// still holds that pair; stale only when the pair is gone.
  kByPairId,
};

struct Options {
  SlaveResolution resolution = SlaveResolution::kByPairId;
  /// Time end-node applications hold a delivered ebit before freeing it.
  Duration hold_time = Duration::zero();
};

/// One pair taking part in an attempt, and the instant its repeater-side half
/// was measured (unset for the last link, which is closed by corrections).
struct HopRecord {
  LinkId link{};
  std::uint64_t pair_seq = 0;
  SimTime birth;
  Fidelity f_init;
  std::optional<SimTime> swap_instant;
};

enum class AttemptState : std::uint8_t { kPending, kEstablished, kFailed };

/// How the attempt is counted in the run totals.
enum class Resolution : std::uint8_t { kOpen, kSuccess, kFailure, kAbandoned };

struct EbitAttempt {
  FiveTuple tuple;
  std::uint32_t app_id = 0;
  std::uint64_t owner = 0;  ///< Lock owner token for this attempt's cells.
  std::vector<NodeId> path;
  std::optional<CellRef> source_cell;
  AttemptState state = AttemptState::kPending;
  Resolution resolution = Resolution::kOpen;
  SimTime started;

  Fidelity composite_fidelity;
  SimTime composite_since;
  double composite_rate_hz = 0.0;

  std::vector<HopRecord> timeline;
  std::optional<SimTime> delivered_at;
  std::optional<Fidelity> delivered_fidelity;
};

struct AppRequest {
  std::uint32_t app_id = 0;
  NodeId src{};
  PortId src_port{};
  NodeId dst{};
  PortId dst_port{};
};

struct Stats {
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t failures_bsm = 0;
  std::uint64_t failures_stale = 0;
  std::uint64_t abandoned = 0;
  std::uint64_t es_free_noop = 0;
  std::uint64_t unknown_messages = 0;
  std::uint64_t relocated_locks = 0;  ///< kByPairId lookups that left the designated cell.
  std::uint64_t duplicate_consumption = 0;
  std::uint64_t waits = 0;
  double wait_total_s = 0.0;
  double wait_max_s = 0.0;
};

/// Callbacks into the workload.
struct Listener {
  /// Destination finished corrections; called only for counted successes.
  std::function<void(const EbitAttempt&)> on_delivered;
  /// EsRemComp reached the source; called only for counted successes.
  std::function<void(const EbitAttempt&)> on_established;
};

/// The asynchronous hop-by-hop establishment protocol running on every node
/// of a topology.
class Protocol {
 public:
  Protocol(Engine& engine, const Topology& topo, QuantumMemory& memory, RngStream& rng,
           const PhysicalParams& params, Options options = {});

  void set_listener(Listener l) { listener_ = std::move(l); }
  void set_message_dump(std::ostream* sink) { dump_ = sink; }

  /// Must be connected to the EPSG absorb hook so waiting attempts resume.
  void on_absorbed(NodeId node, LinkId link, const AbsorbOutcome& outcome);

  /// New application request: allocate a fresh attempt id and start it.
  void request(const AppRequest& req);

  void start_attempt(const AppRequest& req, std::uint64_t attempt_id);
  void handle_es_req(NodeId node, EsReq msg);
  void handle_es_rem_comp(NodeId node, const EsRemComp& msg);
  void handle_es_rem_fail(NodeId node, const EsRemFail& msg);
  void handle_es_free(NodeId node, const EsFree& msg);

  /// Stops new requests and retries, releases everything parked in wait
  /// queues and marks open attempts abandoned. In-flight messages still run.
  void begin_drain();

  [[nodiscard]] const Stats& stats() const { return stats_; }
  [[nodiscard]] std::size_t live_attempts() const { return attempts_.size(); }
  [[nodiscard]] const std::map<FiveTuple, EbitAttempt>& attempts() const { return attempts_; }
  /// Used cells whose owner is not a live attempt.
  [[nodiscard]] std::size_t orphan_used_cells() const;

 private:
  struct Waiter {
    FiveTuple tuple;
    SimTime since;
    std::function<void(std::uint32_t cell)> resume;
    std::function<void()> abort;
  };

  EbitAttempt* find(const FiveTuple& t);
  void send(NodeId from, NodeId to, Message msg);
  void deliver(NodeId to, const Message& msg);
  void dump(NodeId from, NodeId to, const Message& msg);

  /// Locks the youngest Valid Master cell of `node` on `link`, or parks
  /// `resume` until a pair arrives there.
  void acquire_master(NodeId node, LinkId link, const FiveTuple& tuple,
                      std::function<void(std::uint32_t)> resume, std::function<void()> abort);
  std::optional<std::uint32_t> resolve_slave(NodeId node, LinkId link, const CellDesignation& d,
                                             std::uint64_t owner);
  void claim_pair(LinkId link, std::uint64_t pair_seq, std::uint64_t owner);

  void run_bsm(NodeId node, EsReq msg, std::uint32_t slave_cell, std::uint32_t master_cell);
  void fail(EbitAttempt& a, NodeId at, FailureCause cause);
  void resolve(EbitAttempt& a, Resolution r);

  Engine* engine_;
  const Topology* topo_;
  QuantumMemory* memory_;
  RngStream* rng_;
  PhysicalParams params_;
  Options options_;
  Listener listener_;
  std::ostream* dump_ = nullptr;

  bool accepting_ = true;
  std::uint64_t next_owner_ = 1;
  std::map<FiveTuple, EbitAttempt> attempts_;
  std::unordered_map<std::uint64_t, FiveTuple> owners_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> attempt_counters_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::deque<Waiter>> waiting_;
  std::unordered_map<std::uint64_t, std::uint64_t> pair_owner_;
  Stats stats_;
};

}  // namespace qchain::hopper
