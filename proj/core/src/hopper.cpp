#include "qchain/hopper.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "qchain/fidelity.hpp"

namespace qchain::hopper {

std::string to_string(const FiveTuple& t) {
  std::ostringstream os;
  os << to_index(t.src_node) << ':' << to_index(t.src_port) << "->" << to_index(t.dst_node) << ':'
     << to_index(t.dst_port) << '#' << t.attempt_id;
  return os.str();
}

std::string_view to_string(FailureCause c) {
  switch (c) {
    case FailureCause::kBsm: return "bsm";
    case FailureCause::kStaleCell: return "stale-cell";
    case FailureCause::kAborted: return "aborted";
  }
  return "?";
}

namespace {

constexpr std::uint64_t pair_key(LinkId link, std::uint64_t seq) {
  return (static_cast<std::uint64_t>(to_index(link)) << 40) | seq;
}

std::string describe(const Message& msg) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EsReq>) {
          os << "EsReq\t" << to_string(m.tuple) << "\tcell=" << m.upstream_cell.cell_index
             << " seq=" << m.upstream_cell.pair_seq << " corrections=" << m.corrections.size();
        } else if constexpr (std::is_same_v<T, EsRemComp>) {
          os << "EsRemComp\t" << to_string(m.tuple) << "\tcompleted="
             << format_seconds(m.completion_time) << " fidelity=" << m.end_to_end_fidelity.value();
        } else if constexpr (std::is_same_v<T, EsRemFail>) {
          os << "EsRemFail\t" << to_string(m.tuple) << "\tnode=" << to_index(m.failing_node)
             << " cause=" << to_string(m.cause);
        } else {
          os << "EsFree\t" << to_string(m.tuple) << "\tcell=" << m.cell.cell_index
             << " seq=" << m.cell.pair_seq;
        }
      },
      msg);
  return os.str();
}

}  // namespace

Protocol::Protocol(Engine& engine, const Topology& topo, QuantumMemory& memory, RngStream& rng,
                   const PhysicalParams& params, Options options)
    : engine_(&engine),
      topo_(&topo),
      memory_(&memory),
      rng_(&rng),
      params_(params),
      options_(options) {}

EbitAttempt* Protocol::find(const FiveTuple& t) {
  auto it = attempts_.find(t);
  return it == attempts_.end() ? nullptr : &it->second;
}

void Protocol::send(NodeId from, NodeId to, Message msg) {
  std::string detail;
  if (engine_->tracing()) detail = describe(msg);
  engine_->schedule(
      topo_->path_latency(from, to), EventKind::kMessageDelivery,
      [this, from, to, m = std::move(msg)]() mutable {
        dump(from, to, m);
        deliver(to, m);
      },
      std::move(detail));
}

void Protocol::dump(NodeId from, NodeId to, const Message& msg) {
  if (dump_ == nullptr) return;
  *dump_ << format_seconds(engine_->now()) << '\t' << describe(msg) << '\t' << topo_->name(from)
         << "->" << topo_->name(to) << '\n';
}

void Protocol::deliver(NodeId to, const Message& msg) {
  std::visit(
      [this, to](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EsReq>) {
          handle_es_req(to, m);
        } else if constexpr (std::is_same_v<T, EsRemComp>) {
          handle_es_rem_comp(to, m);
        } else if constexpr (std::is_same_v<T, EsRemFail>) {
          handle_es_rem_fail(to, m);
        } else {
          handle_es_free(to, m);
        }
      },
      msg);
}

void Protocol::request(const AppRequest& req) {
  if (!accepting_) return;
  const std::uint64_t id =
      ++attempt_counters_[{to_index(req.src), to_index(req.src_port)}];
  start_attempt(req, id);
}

void Protocol::start_attempt(const AppRequest& req, std::uint64_t attempt_id) {
  const FiveTuple tuple{req.src, req.src_port, req.dst, req.dst_port, attempt_id};
  EbitAttempt a;
  a.tuple = tuple;
  a.app_id = req.app_id;
  a.owner = next_owner_++;
  a.path = topo_->shortest_path(req.src, req.dst);
  a.started = engine_->now();
  const auto [it, inserted] = attempts_.emplace(tuple, std::move(a));
  QCHAIN_EXPECTS(inserted, "duplicate five-tuple " + to_string(tuple));
  owners_.emplace(it->second.owner, tuple);
  ++stats_.attempts;

  const NodeId src = req.src;
  const LinkId first = *topo_->link_between(src, it->second.path[1]);
  acquire_master(
      src, first, tuple,
      [this, tuple, src, first](std::uint32_t cell) {
        EbitAttempt* at = find(tuple);
        QCHAIN_EXPECTS(at != nullptr, "source resumed for a dead attempt");
        const StoredHalf half = *memory_->cell({src, cell}).half;
        at->source_cell = CellRef{src, cell};
        at->composite_fidelity = half.f_init;
        at->composite_since = half.birth;
        at->composite_rate_hz = params_.gamma_hz;
        at->timeline.push_back(HopRecord{first, half.pair_seq, half.birth, half.f_init, {}});
        claim_pair(first, half.pair_seq, at->owner);

        const CellRef peer = *topo_->mirror({src, cell});
        EsReq req_msg{tuple,
                      std::vector<NodeId>(at->path.begin() + 1, at->path.end()),
                      CellDesignation{peer.index, half.pair_seq},
                      {}};
        send(src, peer.node, std::move(req_msg));
      },
      [this, tuple] {
        EbitAttempt* at = find(tuple);
        if (at == nullptr) return;
        resolve(*at, Resolution::kAbandoned);
        owners_.erase(at->owner);
        attempts_.erase(tuple);
      });
}

void Protocol::acquire_master(NodeId node, LinkId link, const FiveTuple& tuple,
                              std::function<void(std::uint32_t)> resume,
                              std::function<void()> abort) {
  EbitAttempt* a = find(tuple);
  QCHAIN_EXPECTS(a != nullptr, "acquire for unknown attempt");
  if (const auto cell = memory_->youngest_valid(node, link)) {
    const CellRef ref{node, *cell};
    const auto out = memory_->lock(ref, memory_->cell(ref).half->pair_seq, a->owner);
    QCHAIN_EXPECTS(out == LockOutcome::kLocked, "youngest Valid cell refused the lock");
    resume(*cell);
    return;
  }
  if (!accepting_) {
    abort();
    return;
  }
  waiting_[{to_index(node), to_index(link)}].push_back(
      Waiter{tuple, engine_->now(), std::move(resume), std::move(abort)});
}

void Protocol::on_absorbed(NodeId node, LinkId link, const AbsorbOutcome& outcome) {
  if (outcome.kind == AbsorbOutcome::Kind::kDropped) return;
  auto it = waiting_.find({to_index(node), to_index(link)});
  if (it == waiting_.end() || it->second.empty()) return;

  Waiter w = std::move(it->second.front());
  it->second.pop_front();
  EbitAttempt* a = find(w.tuple);
  QCHAIN_EXPECTS(a != nullptr, "waiter without a live attempt");
  const CellRef ref{node, outcome.cell};
  const auto out = memory_->lock(ref, memory_->cell(ref).half->pair_seq, a->owner);
  QCHAIN_EXPECTS(out == LockOutcome::kLocked, "freshly absorbed cell refused the lock");

  const double waited = (engine_->now() - w.since).seconds();
  ++stats_.waits;
  stats_.wait_total_s += waited;
  stats_.wait_max_s = std::max(stats_.wait_max_s, waited);
  w.resume(outcome.cell);
}

std::optional<std::uint32_t> Protocol::resolve_slave(NodeId node, LinkId link,
                                                     const CellDesignation& d,
                                                     std::uint64_t owner) {
  const CellGroup& g = topo_->group(node, link);
  if (d.cell_index >= g.first && d.cell_index < g.first + g.size &&
      memory_->lock({node, d.cell_index}, d.pair_seq, owner) == LockOutcome::kLocked) {
    return d.cell_index;
  }
  if (options_.resolution == SlaveResolution::kByPairId) {
    if (const auto other = memory_->find_pair(node, link, d.pair_seq)) {
      if (memory_->lock({node, *other}, d.pair_seq, owner) == LockOutcome::kLocked) {
        ++stats_.relocated_locks;
        return other;
      }
    }
  }
  return std::nullopt;
}

void Protocol::claim_pair(LinkId link, std::uint64_t pair_seq, std::uint64_t owner) {
  const auto [it, inserted] = pair_owner_.emplace(pair_key(link, pair_seq), owner);
  if (!inserted && it->second != owner) ++stats_.duplicate_consumption;
}

void Protocol::handle_es_req(NodeId node, EsReq msg) {
  QCHAIN_EXPECTS(!msg.path.empty() && msg.path.front() == node,
                 "EsReq " + to_string(msg.tuple) + " delivered to node off its path");
  EbitAttempt* a = find(msg.tuple);
  if (a == nullptr) {
    ++stats_.unknown_messages;
    return;
  }
  const std::size_t pos = a->path.size() - msg.path.size();
  QCHAIN_EXPECTS(pos >= 1 && a->path[pos] == node, "EsReq path disagrees with the attempt");
  const NodeId prev = a->path[pos - 1];
  const LinkId upstream = *topo_->link_between(prev, node);

  const auto slave = resolve_slave(node, upstream, msg.upstream_cell, a->owner);
  if (!slave) {
    fail(*a, node, FailureCause::kStaleCell);
    return;
  }
  claim_pair(upstream, msg.upstream_cell.pair_seq, a->owner);

  if (msg.path.size() == 1) {
    QCHAIN_EXPECTS(node == msg.tuple.dst_node, "path ends away from the destination");
    QCHAIN_EXPECTS(msg.corrections.size() == pos - 1,
                   "correction list does not match the repeaters traversed");
    const FiveTuple tuple = msg.tuple;
    const std::uint32_t cell = *slave;
    engine_->schedule(
        params_.xz_duration, EventKind::kXzComplete,
        [this, tuple, node, cell] {
          EbitAttempt* at = find(tuple);
          QCHAIN_EXPECTS(at != nullptr, "corrections finished for a dead attempt");
          const SimTime now = engine_->now();
          const Fidelity f =
              dephase(at->composite_fidelity, at->composite_rate_hz, now - at->composite_since);
          at->state = AttemptState::kEstablished;
          at->delivered_at = now;
          at->delivered_fidelity = f;
          resolve(*at, accepting_ ? Resolution::kSuccess : Resolution::kAbandoned);
          if (at->resolution == Resolution::kSuccess && listener_.on_delivered) {
            listener_.on_delivered(*at);
          }
          // The destination application consumes its half.
          if (options_.hold_time > Duration::zero()) {
            engine_->schedule(options_.hold_time, EventKind::kXzComplete,
                              [this, node, cell] { memory_->free({node, cell}); });
          } else {
            memory_->free({node, cell});
          }
          send(node, tuple.src_node, EsRemComp{tuple, now, f});
        },
        engine_->tracing() ? "corrections " + to_string(tuple) : std::string{});
    return;
  }

  const LinkId downstream = *topo_->link_between(node, msg.path[1]);
  const FiveTuple tuple = msg.tuple;
  const std::uint32_t slave_cell = *slave;
  acquire_master(
      node, downstream, tuple,
      [this, node, msg, slave_cell](std::uint32_t master_cell) {
        run_bsm(node, msg, slave_cell, master_cell);
      },
      [this, node, tuple, slave_cell] {
        memory_->free({node, slave_cell});
        if (EbitAttempt* at = find(tuple)) fail(*at, node, FailureCause::kAborted);
      });
}

void Protocol::run_bsm(NodeId node, EsReq msg, std::uint32_t slave_cell,
                       std::uint32_t master_cell) {
  EbitAttempt* a = find(msg.tuple);
  QCHAIN_EXPECTS(a != nullptr, "BSM for a dead attempt");
  const LinkId downstream = *topo_->link_between(node, msg.path[1]);
  claim_pair(downstream, memory_->cell({node, master_cell}).half->pair_seq, a->owner);

  std::string detail;
  if (engine_->tracing()) detail = "bsm " + to_string(msg.tuple) + " at " + topo_->name(node);
  engine_->schedule(
      params_.bsm_duration, EventKind::kBsmComplete,
      [this, node, m = std::move(msg), slave_cell, master_cell, downstream]() mutable {
        EbitAttempt* at = find(m.tuple);
        QCHAIN_EXPECTS(at != nullptr, "BSM completed for a dead attempt");
        const SimTime now = engine_->now();
        const StoredHalf right = *memory_->cell({node, master_cell}).half;
        const Fidelity left_f =
            dephase(at->composite_fidelity, at->composite_rate_hz, now - at->composite_since);
        const Fidelity right_f = dephase(right.f_init, params_.gamma_hz, now - right.birth);
        const BsmResult r = attempt_bsm(left_f, right_f, params_.bsm_success_prob, *rng_);

        at->timeline.back().swap_instant = now;
        at->timeline.push_back(HopRecord{downstream, right.pair_seq, right.birth, right.f_init, {}});

        // The measurement consumes both halves whatever the outcome.
        memory_->free({node, slave_cell});
        memory_->free({node, master_cell});

        const CellRef peer = *topo_->mirror({node, master_cell});
        const CellDesignation next_cell{peer.index, right.pair_seq};
        if (r.success) {
          at->composite_fidelity = r.f_out;
          at->composite_since = now;
          at->composite_rate_hz = params_.gamma_hz * params_.composite_decay_multiplier;
          m.path.erase(m.path.begin());
          m.upstream_cell = next_cell;
          m.corrections.push_back(r.bits);
          send(node, peer.node, std::move(m));
        } else {
          send(node, peer.node, EsFree{m.tuple, next_cell});
          fail(*at, node, FailureCause::kBsm);
        }
      },
      std::move(detail));
}

void Protocol::fail(EbitAttempt& a, NodeId at, FailureCause cause) {
  a.state = AttemptState::kFailed;
  if (a.resolution == Resolution::kOpen) {
    if (!accepting_ || cause == FailureCause::kAborted) {
      resolve(a, Resolution::kAbandoned);
    } else {
      resolve(a, Resolution::kFailure);
      if (cause == FailureCause::kBsm) ++stats_.failures_bsm;
      if (cause == FailureCause::kStaleCell) ++stats_.failures_stale;
    }
  }
  send(at, a.tuple.src_node, EsRemFail{a.tuple, at, cause});
}

void Protocol::resolve(EbitAttempt& a, Resolution r) {
  if (a.resolution != Resolution::kOpen) return;
  a.resolution = r;
  if (r == Resolution::kSuccess) ++stats_.successes;
  if (r == Resolution::kAbandoned) ++stats_.abandoned;
}

void Protocol::handle_es_rem_comp(NodeId node, const EsRemComp& msg) {
  EbitAttempt* a = find(msg.tuple);
  if (a == nullptr) {
    ++stats_.unknown_messages;
    return;
  }
  QCHAIN_EXPECTS(node == msg.tuple.src_node, "EsRemComp delivered away from the source");
  QCHAIN_EXPECTS(a->state == AttemptState::kEstablished, "EsRemComp for an unfinished attempt");
  EbitAttempt done = std::move(*a);
  owners_.erase(done.owner);
  attempts_.erase(msg.tuple);

  // The source application consumes its half, then asks for the next ebit.
  auto finish = [this, done = std::move(done)] {
    memory_->free(*done.source_cell);
    if (done.resolution == Resolution::kSuccess && listener_.on_established) {
      listener_.on_established(done);
    }
  };
  if (options_.hold_time > Duration::zero()) {
    engine_->schedule(options_.hold_time, EventKind::kXzComplete, std::move(finish));
  } else {
    finish();
  }
}

void Protocol::handle_es_rem_fail(NodeId node, const EsRemFail& msg) {
  EbitAttempt* a = find(msg.tuple);
  if (a == nullptr) {
    ++stats_.unknown_messages;
    return;
  }
  QCHAIN_EXPECTS(node == msg.tuple.src_node, "EsRemFail delivered away from the source");
  if (a->source_cell) memory_->free(*a->source_cell);
  const AppRequest req{a->app_id, a->tuple.src_node, a->tuple.src_port, a->tuple.dst_node,
                       a->tuple.dst_port};
  owners_.erase(a->owner);
  attempts_.erase(msg.tuple);
  request(req);
}

void Protocol::handle_es_free(NodeId node, const EsFree& msg) {
  const auto cells = topo_->assignments(node);
  if (msg.cell.cell_index >= cells.size()) {
    ++stats_.es_free_noop;
    return;
  }
  const EbitAttempt* a = find(msg.tuple);
  if (a == nullptr) {
    ++stats_.es_free_noop;
    return;
  }
  const LinkId link = cells[msg.cell.cell_index].link;
  std::optional<std::uint32_t> target;
  const auto holds_pair = [&](std::uint32_t i) {
    const MemoryCell& c = memory_->cell({node, i});
    return c.half && c.half->pair_seq == msg.cell.pair_seq &&
           (c.state == CellState::kValid || c.owner == a->owner);
  };
  if (holds_pair(msg.cell.cell_index)) {
    target = msg.cell.cell_index;
  } else if (options_.resolution == SlaveResolution::kByPairId) {
    if (const auto other = memory_->find_pair(node, link, msg.cell.pair_seq);
        other && holds_pair(*other)) {
      target = other;
    }
  }
  if (!target) {
    ++stats_.es_free_noop;
    return;
  }
  memory_->free({node, *target});
}

void Protocol::begin_drain() {
  accepting_ = false;
  for (auto& [key, queue] : waiting_) {
    while (!queue.empty()) {
      Waiter w = std::move(queue.front());
      queue.pop_front();
      w.abort();
    }
  }
  waiting_.clear();
}

std::size_t Protocol::orphan_used_cells() const {
  std::size_t orphans = 0;
  for (std::uint32_t n = 0; n < topo_->node_count(); ++n) {
    for (std::uint32_t i = 0; i < topo_->cells_at(NodeId{n}); ++i) {
      const MemoryCell& c = memory_->cell({NodeId{n}, i});
      if (c.state == CellState::kUsed && owners_.find(c.owner) == owners_.end()) ++orphans;
    }
  }
  return orphans;
}

}  // namespace qchain::hopper
