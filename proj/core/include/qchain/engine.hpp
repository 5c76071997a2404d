#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "qchain/types.hpp"

namespace qchain {

enum class EventKind : std::uint8_t {
  kPairArrival,
  kMessageDelivery,
  kBsmComplete,
  kXzComplete,
  kSlotBoundary,
  kSimEnd,
};

std::string_view to_string(EventKind kind);

/// Identifies a scheduled event for cancellation.
struct EventHandle {
  std::uint64_t sequence = 0;
};

/// Single-threaded discrete-event scheduler.
///
/// Events fire in (fire_time, insertion sequence) order, so events scheduled
/// for the same instant run first-in first-out. When a trace sink is attached,
/// every dispatch writes `<time_s>\t<seq>\t<kind>\t<detail>`.
class Engine {
 public:
  using Action = std::function<void()>;

  Engine() = default;
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  EventHandle schedule(Duration delay, EventKind kind, Action action, std::string detail = {});
  EventHandle schedule_at(SimTime when, EventKind kind, Action action, std::string detail = {});

  /// Returns false if the event already fired or was cancelled before.
  bool cancel(EventHandle handle);

  /// Dispatches every event with fire_time <= t_end, then sets the clock to t_end.
  std::uint64_t run_until(SimTime t_end);

  /// Dispatches events until the queue is empty; the clock stops at the last event.
  std::uint64_t run_to_completion();

  [[nodiscard]] SimTime now() const { return now_; }
  [[nodiscard]] std::size_t pending() const { return heap_.size() - cancelled_.size(); }
  [[nodiscard]] std::uint64_t dispatched() const { return dispatched_; }

  void set_trace(std::ostream* sink) { trace_ = sink; }
  [[nodiscard]] bool tracing() const { return trace_ != nullptr; }

 private:
  struct Event {
    SimTime fire_time;
    std::uint64_t sequence;
    EventKind kind;
    Action action;
    std::string detail;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.sequence > b.sequence;
    }
  };

  bool dispatch_next();

  std::vector<Event> heap_;
  std::unordered_set<std::uint64_t> cancelled_;
  SimTime now_;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t dispatched_ = 0;
  std::ostream* trace_ = nullptr;
};

}  // namespace qchain
