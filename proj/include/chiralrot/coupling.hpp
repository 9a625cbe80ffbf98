#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chiralrot/error.hpp"
#include "chiralrot/rotbasis.hpp"
#include "chiralrot/wigner.hpp"

namespace chiralrot {

using cplx = std::complex<double>;

/// Spherical triple indexed by sigma + 1, i.e. (c_{-1}, c_0, c_{+1}).
using SphericalTriple = std::array<cplx, 3>;

enum class Polarization { X, Y, Z, SigmaPlus, SigmaMinus, Custom };

constexpr std::string_view to_string(Polarization p) {
  switch (p) {
    case Polarization::X: return "x";
    case Polarization::Y: return "y";
    case Polarization::Z: return "z";
    case Polarization::SigmaPlus: return "sigma+";
    case Polarization::SigmaMinus: return "sigma-";
    case Polarization::Custom: return "custom";
  }
  return "custom";
}

inline std::optional<Polarization> parse_polarization(std::string_view s) {
  if (s == "x") return Polarization::X;
  if (s == "y") return Polarization::Y;
  if (s == "z") return Polarization::Z;
  if (s == "sigma+" || s == "s+") return Polarization::SigmaPlus;
  if (s == "sigma-" || s == "s-") return Polarization::SigmaMinus;
  return std::nullopt;
}

/// Field components E^S_sigma entering mu.E = sum_sigma mu^S_sigma E^S_sigma,
/// so E^S_sigma = (-1)^sigma E_{-sigma} in terms of the standard spherical
/// components E_{+-1} = -+(E_x +- i E_y)/sqrt2, E_0 = E_z:
///
///   polarization   (E_{-1}, E_0, E_{+1})
///   z              (0, 1, 0)
///   x              (1, 0, -1) / sqrt2
///   y              (i, 0, i) / sqrt2
///   sigma+         (0, 0, 1)
///   sigma-         (1, 0, 0)
inline SphericalTriple helicity_components(Polarization p) {
  const double r = std::numbers::sqrt2 / 2.0;
  switch (p) {
    case Polarization::X: return {cplx(r, 0), cplx(0, 0), cplx(-r, 0)};
    case Polarization::Y: return {cplx(0, r), cplx(0, 0), cplx(0, r)};
    case Polarization::Z: return {cplx(0, 0), cplx(1, 0), cplx(0, 0)};
    case Polarization::SigmaPlus: return {cplx(0, 0), cplx(0, 0), cplx(1, 0)};
    case Polarization::SigmaMinus: return {cplx(1, 0), cplx(0, 0), cplx(0, 0)};
    case Polarization::Custom: break;
  }
  throw Error(ErrorCode::InvalidArgument,
              "helicity_components: custom polarization has no fixed triple");
}

/// Transverse position of the molecule (beam axes along z).
struct Position {
  double x = 0.0;
  double y = 0.0;
};

/// Gaussian field envelope exp(-|r - c|^2 / w^2) with an optional linear
/// phase exp(i k.r).
struct BeamProfile {
  double center_x = 0.0;
  double center_y = 0.0;
  double waist = 1.0;
  double phase_gradient_x = 0.0;
  double phase_gradient_y = 0.0;

  cplx envelope(const Position& r) const {
    const double dx = r.x - center_x, dy = r.y - center_y;
    const double amp = std::exp(-(dx * dx + dy * dy) / (waist * waist));
    const double phase = phase_gradient_x * r.x + phase_gradient_y * r.y;
    return std::polar(amp, phase);
  }
};

struct VibPair {
  int lower = 1;
  int upper = 2;

  friend constexpr auto operator<=>(const VibPair&, const VibPair&) = default;
};

struct LaserSpec {
  Polarization polarization = Polarization::Z;
  SphericalTriple field = helicity_components(Polarization::Z);
  double peak = 1.0;  // GHz; multiplies the dimensionless dipole element
  BeamProfile beam;
  double frequency = 0.0;  // GHz
  VibPair drives;

  static LaserSpec with_polarization(Polarization p, VibPair drives,
                                     double peak = 1.0) {
    LaserSpec l;
    l.polarization = p;
    l.field = helicity_components(p);
    l.drives = drives;
    l.peak = peak;
    return l;
  }
};

/// <v_f| mu^M_{sigma'} |v_i> for one vibrational pair, in units of the
/// laser peak scale.
struct DipoleTransition {
  SphericalTriple components{cplx(0), cplx(1), cplx(0)};
  bool chiral_flip = true;

  /// Dipole size used by the rotationless three-level reference: the norm of
  /// the triple carrying the phase of its largest component.
  cplx rotationless_element() const {
    double norm2 = 0.0;
    std::size_t largest = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      norm2 += std::norm(components[s]);
      if (std::abs(components[s]) > std::abs(components[largest])) largest = s;
    }
    if (norm2 == 0.0) return 0.0;
    if (norm2 == std::norm(components[largest])) return components[largest];
    return std::sqrt(norm2) * components[largest] / std::abs(components[largest]);
  }
};

struct DipoleModel {
  std::map<VibPair, DipoleTransition> transitions;

  /// Dipole along the molecular symmetry axis (mu_{+-1} = 0) on all three
  /// loop transitions, every one of them chirality sensitive.
  static DipoleModel z_aligned(double mu12 = 1.0, double mu23 = 1.0,
                               double mu13 = 1.0) {
    DipoleModel d;
    d.transitions[{1, 2}] = {{cplx(0), cplx(mu12), cplx(0)}, true};
    d.transitions[{2, 3}] = {{cplx(0), cplx(mu23), cplx(0)}, true};
    d.transitions[{1, 3}] = {{cplx(0), cplx(mu13), cplx(0)}, true};
    return d;
  }

  const DipoleTransition& at(VibPair p) const {
    auto it = transitions.find(p);
    if (it == transitions.end())
      throw Error(ErrorCode::UnknownTransition,
                  "dipole model has no transition " + std::to_string(p.lower) +
                      " -> " + std::to_string(p.upper));
    return it->second;
  }

  void validate() const {
    for (const auto& [pair, t] : transitions) {
      if (t.components[0] == 0.0 && t.components[1] == 0.0 && t.components[2] == 0.0)
        throw Error(ErrorCode::InvalidArgument,
                    "dipole transition " + std::to_string(pair.lower) + "-" +
                        std::to_string(pair.upper) + " has no non-zero component");
    }
  }
};

enum class Enantiomer { L, R };

constexpr std::string_view to_string(Enantiomer e) { return e == Enantiomer::L ? "L" : "R"; }

/// Sign carried by a transition: flagged transitions are negated for L.
inline double chiral_sign(Enantiomer who, bool flagged) {
  return (flagged && who == Enantiomer::L) ? -1.0 : 1.0;
}

/// Polarisation- and dipole-weighted rotational matrix element
/// sum_{sigma'} mu_{sigma'} sum_sigma I(f, i, sigma, sigma') E_sigma.
/// For a given (f, i) at most one (sigma, sigma') term survives.
inline cplx orientation_factor(const RotState& final_rot, const RotState& initial_rot,
                               const SphericalTriple& field,
                               const SphericalTriple& dipole) {
  const int sigma = final_rot.M - initial_rot.M;
  const int sigma_prime = final_rot.K - initial_rot.K;
  if (std::abs(sigma) > 1 || std::abs(sigma_prime) > 1) return 0.0;
  const cplx e = field[static_cast<std::size_t>(sigma + 1)];
  const cplx mu = dipole[static_cast<std::size_t>(sigma_prime + 1)];
  if (e == 0.0 || mu == 0.0) return 0.0;
  const double I = wigner::rot_integral(final_rot, initial_rot, sigma, sigma_prime);
  return mu * I * e;
}

/// Omega_fi = <v_f, f| mu.E(r) |v_i, i> for an upward transition driven by
/// `laser`, in GHz.
inline cplx rabi_frequency(const LevelIndex& final_level, const LevelIndex& initial_level,
                           const LaserSpec& laser, const DipoleModel& dipole,
                           Enantiomer who, const Position& r) {
  const VibPair pair{initial_level.vib, final_level.vib};
  if (pair != laser.drives)
    throw Error(ErrorCode::InvalidArgument,
                "rabi_frequency: levels do not match the laser's vibrational pair");
  const DipoleTransition& t = dipole.at(pair);
  const cplx factor =
      orientation_factor(final_level.rot, initial_level.rot, laser.field, t.components);
  if (factor == 0.0) return 0.0;
  return chiral_sign(who, t.chiral_flip) * laser.peak * laser.beam.envelope(r) * factor;
}

/// Rotationless three-level Rabi frequency of a laser at r.
inline cplx rotationless_rabi(const LaserSpec& laser, const DipoleModel& dipole,
                              Enantiomer who, const Position& r) {
  const DipoleTransition& t = dipole.at(laser.drives);
  return chiral_sign(who, t.chiral_flip) * laser.peak * laser.beam.envelope(r) *
         t.rotationless_element();
}

struct Transition {
  LevelIndex final_level;
  LevelIndex initial_level;

  friend constexpr auto operator<=>(const Transition&, const Transition&) = default;
};

/// Transitions with non-zero Rabi frequency at the beam centre, found from the
/// selection rules dJ in {0, +-1}, dM = sigma, dK = sigma'. Sorted by
/// (initial, final).
inline std::vector<Transition> allowed_transitions(const LaserSpec& laser,
                                                   const DipoleModel& dipole,
                                                   const std::vector<LevelIndex>& basis) {
  const DipoleTransition& t = dipole.at(laser.drives);
  std::vector<std::pair<LevelIndex, LevelIndex>> found;
  std::map<LevelIndex, bool> present;
  for (const auto& l : basis) present[l] = true;

  for (const auto& init : basis) {
    if (init.vib != laser.drives.lower) continue;
    for (int s = -1; s <= 1; ++s) {
      if (laser.field[static_cast<std::size_t>(s + 1)] == 0.0) continue;
      for (int sp = -1; sp <= 1; ++sp) {
        if (t.components[static_cast<std::size_t>(sp + 1)] == 0.0) continue;
        for (int dJ = -1; dJ <= 1; ++dJ) {
          const LevelIndex fin{laser.drives.upper,
                               {init.rot.J + dJ, init.rot.K + sp, init.rot.M + s}};
          if (!fin.rot.valid() || !present.count(fin)) continue;
          if (orientation_factor(fin.rot, init.rot, laser.field, t.components) == 0.0)
            continue;
          found.emplace_back(init, fin);
        }
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<Transition> out;
  out.reserve(found.size());
  for (const auto& [i, f] : found) out.push_back({f, i});
  return out;
}

}  // namespace chiralrot
