#pragma once

#include <cmath>
#include <numbers>

// Frequencies are ordinary frequencies in GHz (energy / h), times are in ns.
// A Hamiltonian H in GHz generates exp(-i 2 pi H t).
namespace chiralrot::units {

/// E_h / h in GHz.
inline constexpr double hartree_ghz = 6.579683920502e6;

/// k_B / h in GHz per kelvin.
inline constexpr double boltzmann_ghz_per_kelvin = 20.83661912;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Peak Rabi frequency sqrt(Q) * scale (scale in hartree), converted to GHz.
inline double rabi_scale_ghz(double q_factor = 1000.0,
                             double scale_hartree = 1e-9) {
  return std::sqrt(q_factor) * scale_hartree * hartree_ghz;
}

inline double period_ns(double frequency_ghz) { return 1.0 / frequency_ghz; }

}  // namespace chiralrot::units
