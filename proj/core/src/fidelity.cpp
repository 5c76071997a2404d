#include "qchain/fidelity.hpp"

#include <cmath>
#include <string>

namespace qchain {

Fidelity dephase(Fidelity f, double gamma_hz, double dt_seconds) {
  QCHAIN_EXPECTS(dt_seconds >= 0.0, "negative dephasing interval");
  QCHAIN_EXPECTS(gamma_hz >= 0.0, "negative decay rate");
  QCHAIN_EXPECTS(f.value() >= Fidelity::kDephasedFloor,
                 "dephase input below 1/4: " + std::to_string(f.value()));
  const double excess = f.value() - Fidelity::kDephasedFloor;
  return Fidelity(Fidelity::kDephasedFloor + excess * std::exp(-gamma_hz * dt_seconds));
}

Fidelity swap_fidelity(Fidelity f1, Fidelity f2) {
  QCHAIN_EXPECTS(f1.value() >= Fidelity::kDephasedFloor && f2.value() >= Fidelity::kDephasedFloor,
                 "swap input below 1/4");
  // Werner parameters multiply under swapping.
  const double w1 = (4.0 * f1.value() - 1.0) / 3.0;
  const double w2 = (4.0 * f2.value() - 1.0) / 3.0;
  return Fidelity(0.25 + 0.75 * (w1 * w2));
}

}  // namespace qchain
