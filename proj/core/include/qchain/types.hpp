#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace qchain {

/// Extra text printed with a contract violation on this thread, e.g. the
/// replication seed, so an abort can be replayed.
inline thread_local std::string violation_context;

// Contract violations are programming errors: print and abort.
[[noreturn]] inline void contract_violation(const char* expr, const char* file, int line,
                                            const std::string& msg) {
  std::fprintf(stderr, "qchain: contract violation: %s (%s:%d): %s\n", expr, file, line,
               msg.c_str());
  if (!violation_context.empty()) std::fprintf(stderr, "qchain: while running %s\n", violation_context.c_str());
  std::abort();
}

#define QCHAIN_EXPECTS(cond, msg)                                     \
  do {                                                                \
    if (!(cond)) ::qchain::contract_violation(#cond, __FILE__, __LINE__, (msg)); \
  } while (0)

/// Raised for invalid scenarios: bad config values, infeasible memory splits.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when no route exists between two nodes.
class PathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t kPicosPerSecond = 1'000'000'000'000;

/// Time span with picosecond resolution. Integer ticks keep event ordering
/// and sums of latencies exact.
class Duration {
 public:
  constexpr Duration() = default;

  static constexpr Duration from_picos(std::int64_t ps) { return Duration(ps); }
  static Duration from_seconds(double s);
  static constexpr Duration zero() { return Duration(0); }

  [[nodiscard]] constexpr std::int64_t picos() const { return ps_; }
  [[nodiscard]] constexpr double seconds() const {
    return static_cast<double>(ps_) / static_cast<double>(kPicosPerSecond);
  }

  constexpr Duration operator+(Duration o) const { return Duration(ps_ + o.ps_); }
  constexpr Duration operator-(Duration o) const { return Duration(ps_ - o.ps_); }
  constexpr Duration operator*(std::int64_t k) const { return Duration(ps_ * k); }
  constexpr Duration& operator+=(Duration o) {
    ps_ += o.ps_;
    return *this;
  }
  constexpr auto operator<=>(const Duration&) const = default;

 private:
  constexpr explicit Duration(std::int64_t ps) : ps_(ps) {}
  std::int64_t ps_ = 0;
};

/// Instant on the simulation clock, measured from the start of the run.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime from_picos(std::int64_t ps) { return SimTime(ps); }
  static SimTime from_seconds(double s);

  [[nodiscard]] constexpr std::int64_t picos() const { return ps_; }
  [[nodiscard]] constexpr double seconds() const {
    return static_cast<double>(ps_) / static_cast<double>(kPicosPerSecond);
  }

  constexpr SimTime operator+(Duration d) const { return SimTime(ps_ + d.picos()); }
  constexpr Duration operator-(SimTime o) const { return Duration::from_picos(ps_ - o.ps_); }
  constexpr auto operator<=>(const SimTime&) const = default;

 private:
  constexpr explicit SimTime(std::int64_t ps) : ps_(ps) {}
  std::int64_t ps_ = 0;
};

/// Exact decimal rendering of a time in seconds, 12 fractional digits.
std::string format_seconds(std::int64_t picos);
inline std::string format_seconds(SimTime t) { return format_seconds(t.picos()); }
inline std::string format_seconds(Duration d) { return format_seconds(d.picos()); }

/// Fidelity of a two-qubit state with respect to the target Bell pair.
class Fidelity {
 public:
  static constexpr double kDephasedFloor = 0.25;
  static constexpr double kEntanglementThreshold = 0.5;

  constexpr Fidelity() = default;
  explicit Fidelity(double v);

  [[nodiscard]] constexpr double value() const { return v_; }
  [[nodiscard]] constexpr bool entangled() const { return v_ >= kEntanglementThreshold; }
  constexpr auto operator<=>(const Fidelity&) const = default;

 private:
  double v_ = 1.0;
};

enum class NodeId : std::uint32_t {};
enum class LinkId : std::uint32_t {};
enum class PortId : std::uint32_t {};

constexpr std::uint32_t to_index(NodeId n) { return static_cast<std::uint32_t>(n); }
constexpr std::uint32_t to_index(LinkId l) { return static_cast<std::uint32_t>(l); }
constexpr std::uint32_t to_index(PortId p) { return static_cast<std::uint32_t>(p); }

/// Physical parameters shared by every link and node of a scenario.
struct PhysicalParams {
  double gamma_hz = 1.0;
  double f_init = 0.95;
  double epsg_rate_hz = 100.0;
  double bsm_success_prob = 0.95;
  Duration bsm_duration = Duration::from_picos(kPicosPerSecond / 1000);
  Duration xz_duration = Duration::from_picos(kPicosPerSecond / 1000);
  double signal_speed_mps = 3.0e8;
  /// Decay-rate multiplier applied to swapped (composite) pairs.
  double composite_decay_multiplier = 1.0;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

}  // namespace qchain
