#include "qchain/rng.hpp"

#include <cmath>

#include "qchain/types.hpp"

namespace qchain {

double RngStream::exponential(double rate) {
  QCHAIN_EXPECTS(rate > 0.0, "exponential rate must be positive");
  // 1 - u lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform()) / rate;
}

std::uint32_t RngStream::uniform_below(std::uint32_t n) {
  QCHAIN_EXPECTS(n > 0, "empty range");
  // Lemire's multiply-shift with rejection.
  std::uint64_t m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(engine_() >> 32)) * n;
  auto low = static_cast<std::uint32_t>(m);
  if (low < n) {
    const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
    while (low < threshold) {
      m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(engine_() >> 32)) * n;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return static_cast<std::uint32_t>(m >> 32);
}

}  // namespace qchain
