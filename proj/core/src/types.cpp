#include "qchain/types.hpp"

#include <cmath>
#include <string>

namespace qchain {

Duration Duration::from_seconds(double s) {
  QCHAIN_EXPECTS(std::isfinite(s), "duration must be finite");
  return Duration(std::llround(s * static_cast<double>(kPicosPerSecond)));
}

SimTime SimTime::from_seconds(double s) {
  QCHAIN_EXPECTS(std::isfinite(s) && s >= 0.0, "time must be finite and non-negative");
  return SimTime(std::llround(s * static_cast<double>(kPicosPerSecond)));
}

std::string format_seconds(std::int64_t picos) {
  const bool negative = picos < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-(picos + 1)) + 1
                                     : static_cast<std::uint64_t>(picos);
  const std::uint64_t whole = mag / static_cast<std::uint64_t>(kPicosPerSecond);
  const std::uint64_t frac = mag % static_cast<std::uint64_t>(kPicosPerSecond);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%012llu", negative ? "-" : "",
                static_cast<unsigned long long>(whole), static_cast<unsigned long long>(frac));
  return buf;
}

Fidelity::Fidelity(double v) : v_(v) {
  QCHAIN_EXPECTS(v >= 0.0 && v <= 1.0, "fidelity outside [0, 1]: " + std::to_string(v));
}

void PhysicalParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(std::string(name) + " must be strictly positive");
  };
  positive(gamma_hz, "gamma");
  positive(epsg_rate_hz, "epsg_rate");
  positive(signal_speed_mps, "signal_speed");
  positive(composite_decay_multiplier, "composite_decay_multiplier");
  if (!(f_init >= Fidelity::kDephasedFloor && f_init <= 1.0))
    throw ConfigError("f_init must lie in [0.25, 1]");
  if (!(bsm_success_prob > 0.0 && bsm_success_prob <= 1.0))
    throw ConfigError("bsm_success_prob must lie in (0, 1]");
  if (bsm_duration <= Duration::zero()) throw ConfigError("bsm_duration must be strictly positive");
  if (xz_duration <= Duration::zero()) throw ConfigError("xz_duration must be strictly positive");
}

}  // namespace qchain
