#pragma once

#include "qchain/types.hpp"

namespace qchain {

/// Fidelity of a stored pair after `dt_seconds` of dephasing at rate `gamma_hz`:
/// 1/4 + (f - 1/4) * exp(-gamma * dt).
[[nodiscard]] Fidelity dephase(Fidelity f, double gamma_hz, double dt_seconds);
[[nodiscard]] inline Fidelity dephase(Fidelity f, double gamma_hz, Duration dt) {
  return dephase(f, gamma_hz, dt.seconds());
}

/// Fidelity of the pair produced by swapping two Werner pairs:
/// 1/4 + 3/4 * ((4 f1 - 1) / 3) * ((4 f2 - 1) / 3).
[[nodiscard]] Fidelity swap_fidelity(Fidelity f1, Fidelity f2);

}  // namespace qchain
