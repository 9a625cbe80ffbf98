#pragma once

#include <cmath>
#include <compare>
#include <ostream>
#include <string>
#include <vector>

#include "chiralrot/error.hpp"
#include "chiralrot/rot_state.hpp"
#include "chiralrot/units.hpp"

namespace chiralrot {

/// Rotational constants in GHz, prolate ordering A >= B >= C > 0.
struct RotorConstants {
  double A = 76.15;
  double B = 6.401;
  double C = 6.399;

  void validate() const {
    if (!(C > 0.0 && B >= C && A >= B))
      throw Error(ErrorCode::InvalidArgument,
                  "rotor constants must satisfy A >= B >= C > 0");
  }
};

/// All |J K M> with J <= jmax.
struct BasisTruncation {
  int jmax = 0;

  std::size_t size() const {
    const auto j = static_cast<std::size_t>(jmax);
    return (j + 1) * (2 * j + 1) * (2 * j + 3) / 3;
  }
};

/// Product label (vibrational level, rotational state). Vibrational levels
/// are numbered 1, 2, 3.
struct LevelIndex {
  int vib = 1;
  RotState rot;

  friend constexpr auto operator<=>(const LevelIndex&, const LevelIndex&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const LevelIndex& l) {
  return os << '|' << l.vib << '>' << l.rot;
}

inline std::string to_string(const LevelIndex& l) {
  return std::to_string(l.vib) + ":" + std::to_string(l.rot.J) + ":" +
         std::to_string(l.rot.K) + ":" + std::to_string(l.rot.M);
}

/// Symmetric-top energy in GHz: C J(J+1) + (A - C) K^2. B does not enter.
inline double rot_energy(const RotState& s, const RotorConstants& c) {
  return c.C * s.J * (s.J + 1) + (c.A - c.C) * s.K * s.K;
}

/// Ray's asymmetry parameter; -1 for a prolate symmetric top.
inline double asymmetry_kappa(const RotorConstants& c) {
  if (c.A == c.C)
    throw Error(ErrorCode::DegenerateRotor, "asymmetry_kappa: A == C");
  return (2.0 * c.B - c.A - c.C) / (c.A - c.C);
}

/// Ascending J, then K, then M.
inline std::vector<RotState> enumerate_basis(const BasisTruncation& t) {
  if (t.jmax < 0)
    throw Error(ErrorCode::InvalidArgument, "enumerate_basis: jmax < 0");
  std::vector<RotState> out;
  out.reserve(t.size());
  for (int J = 0; J <= t.jmax; ++J)
    for (int K = -J; K <= J; ++K)
      for (int M = -J; M <= J; ++M) out.push_back({J, K, M});
  return out;
}

/// Diagonal rotational density matrix over a truncated basis.
struct ThermalRotState {
  std::vector<RotState> states;
  std::vector<double> probabilities;
};

/// Boltzmann populations. T = 0 puts everything on |0 0 0>. Throws
/// TruncationInsufficient when the J = jmax shell holds more than
/// `cutoff_mass` of the population.
inline ThermalRotState thermal_rot_state(double temperature_k,
                                         const RotorConstants& c,
                                         const BasisTruncation& t,
                                         double cutoff_mass = 1e-6) {
  if (temperature_k < 0.0)
    throw Error(ErrorCode::InvalidArgument, "thermal_rot_state: T < 0");
  ThermalRotState out;
  out.states = enumerate_basis(t);
  out.probabilities.assign(out.states.size(), 0.0);

  if (temperature_k == 0.0) {
    out.probabilities[0] = 1.0;
    return out;
  }

  const double kt = units::boltzmann_ghz_per_kelvin * temperature_k;
  double z = 0.0;
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    out.probabilities[i] = std::exp(-rot_energy(out.states[i], c) / kt);
    z += out.probabilities[i];
  }
  double edge = 0.0;
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    out.probabilities[i] /= z;
    if (out.states[i].J == t.jmax) edge += out.probabilities[i];
  }
  if (edge > cutoff_mass)
    throw Error(ErrorCode::TruncationInsufficient,
                "thermal_rot_state: population " + std::to_string(edge) +
                    " at J = jmax = " + std::to_string(t.jmax) +
                    " exceeds threshold " + std::to_string(cutoff_mass));
  return out;
}

}  // namespace chiralrot
