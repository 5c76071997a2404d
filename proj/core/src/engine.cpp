#include "qchain/engine.hpp"

#include <algorithm>
#include <utility>

namespace qchain {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kPairArrival: return "pair-arrival";
    case EventKind::kMessageDelivery: return "message-delivery";
    case EventKind::kBsmComplete: return "bsm-complete";
    case EventKind::kXzComplete: return "xz-complete";
    case EventKind::kSlotBoundary: return "slot-boundary";
    case EventKind::kSimEnd: return "sim-end";
  }
  return "unknown";
}

EventHandle Engine::schedule(Duration delay, EventKind kind, Action action, std::string detail) {
  QCHAIN_EXPECTS(delay >= Duration::zero(), "negative scheduling delay");
  return schedule_at(now_ + delay, kind, std::move(action), std::move(detail));
}

EventHandle Engine::schedule_at(SimTime when, EventKind kind, Action action, std::string detail) {
  QCHAIN_EXPECTS(when >= now_, "event scheduled in the past");
  const std::uint64_t seq = next_sequence_++;
  heap_.push_back(Event{when, seq, kind, std::move(action), std::move(detail)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return EventHandle{seq};
}

bool Engine::cancel(EventHandle handle) {
  const bool queued = std::any_of(heap_.begin(), heap_.end(),
                                  [&](const Event& e) { return e.sequence == handle.sequence; });
  if (!queued) return false;
  return cancelled_.insert(handle.sequence).second;
}

bool Engine::dispatch_next() {
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  Event ev = std::move(heap_.back());
  heap_.pop_back();
  if (cancelled_.erase(ev.sequence) > 0) return false;
  now_ = ev.fire_time;
  ++dispatched_;
  if (trace_ != nullptr) {
    *trace_ << format_seconds(now_) << '\t' << ev.sequence << '\t' << to_string(ev.kind) << '\t'
            << ev.detail << '\n';
  }
  if (ev.action) ev.action();
  return true;
}

std::uint64_t Engine::run_until(SimTime t_end) {
  QCHAIN_EXPECTS(t_end >= now_, "run_until target precedes the clock");
  std::uint64_t count = 0;
  while (!heap_.empty() && heap_.front().fire_time <= t_end) {
    if (dispatch_next()) ++count;
  }
  now_ = t_end;
  return count;
}

std::uint64_t Engine::run_to_completion() {
  std::uint64_t count = 0;
  while (!heap_.empty()) {
    if (dispatch_next()) ++count;
  }
  return count;
}

}  // namespace qchain
