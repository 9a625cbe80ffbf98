#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "chiralrot/coupling.hpp"
#include "chiralrot/error.hpp"
#include "chiralrot/looptopology.hpp"
#include "chiralrot/rotbasis.hpp"

// Interaction-picture Hamiltonian over the vibration-rotation product basis.
namespace chiralrot {

/// Lasers in loop order: 1-2, 2-3, 1-3.
using LaserSet = std::array<LaserSpec, 3>;

inline LaserSet default_lasers(Polarization p12, Polarization p23, Polarization p13,
                               double peak = units::rabi_scale_ghz()) {
  LaserSet l{LaserSpec::with_polarization(p12, {1, 2}, peak),
             LaserSpec::with_polarization(p23, {2, 3}, peak),
             LaserSpec::with_polarization(p13, {1, 3}, peak)};
  l[1].beam.center_x = -0.5;
  l[2].beam.center_x = 0.5;
  return l;
}

/// Vibrational term values in GHz for levels 1, 2, 3. Only differences enter,
/// and with loop-consistent tuning they cancel from every detuning.
struct VibLevels {
  std::array<double, 3> energy{0.0, 3.0e4, 6.2e4};

  double at(int vib) const {
    if (vib < 1 || vib > 3) throw Error(ErrorCode::InvalidArgument, "vibrational level outside 1..3");
    return energy[static_cast<std::size_t>(vib - 1)];
  }
};

inline double level_energy(const LevelIndex& l, const VibLevels& v, const RotorConstants& c) {
  return v.at(l.vib) + rot_energy(l.rot, c);
}

enum class Tuning { Ground, Loop, Absolute };

struct TuningSpec {
  Tuning mode = Tuning::Ground;
  int anchor_J = 0;  // loop mode: |1 J K> <-> |2 J+1 K> <-> |3 J K>
  int anchor_K = 0;
};

/// Sets laser frequencies. Ground: resonant between rotational ground states
/// of the two vibrational levels. Loop: resonant on the anchor loop.
/// Absolute: frequencies left as given.
inline void tune(LaserSet& lasers, const TuningSpec& t, const VibLevels& v, const RotorConstants& c) {
  if (t.mode == Tuning::Absolute) return;
  for (auto& l : lasers) {
    const double gap = v.at(l.drives.upper) - v.at(l.drives.lower);
    if (t.mode == Tuning::Ground) {
      l.frequency = gap;
      continue;
    }
    if (t.anchor_J < 0 || std::abs(t.anchor_K) > t.anchor_J)
      throw Error(ErrorCode::InvalidArgument, "loop tuning anchor needs |K| <= J");
    auto rot_of = [&](int vib) {
      return RotState{vib == 2 ? t.anchor_J + 1 : t.anchor_J, t.anchor_K, 0};
    };
    l.frequency = gap + rot_energy(rot_of(l.drives.upper), c) - rot_energy(rot_of(l.drives.lower), c);
  }
}

/// One allowed transition, stored for basis indices a < b.
struct CouplingEntry {
  std::size_t a = 0;
  std::size_t b = 0;
  cplx omega = 0.0;    // <a|H|b> at t = 0, GHz
  double delta = 0.0;  // E_a - E_b + nu, GHz
  int laser = 0;       // 0: 1-2, 1: 2-3, 2: 1-3
};

struct CouplingMatrix {
  std::vector<LevelIndex> basis;
  std::vector<CouplingEntry> entries;

  std::size_t size() const { return basis.size(); }

  std::size_t index_of(const LevelIndex& l) const {
    auto it = std::lower_bound(basis.begin(), basis.end(), l);
    if (it == basis.end() || *it != l)
      throw Error(ErrorCode::InvalidArgument, "level not in basis");
    return static_cast<std::size_t>(it - basis.begin());
  }

  double max_abs_omega() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, std::abs(e.omega));
    return m;
  }

  double max_abs_delta() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, std::abs(e.delta));
    return m;
  }
};

struct AssembleInput {
  LaserSet lasers;
  DipoleModel dipole = DipoleModel::z_aligned();
  RotorConstants constants;
  VibLevels vib;
  BasisTruncation truncation{2};
  Position r;
};

inline std::vector<LevelIndex> product_basis(const BasisTruncation& t) {
  std::vector<LevelIndex> out;
  const auto rot = enumerate_basis(t);
  out.reserve(3 * rot.size());
  for (int v = 1; v <= 3; ++v)
    for (const auto& s : rot) out.push_back({v, s});
  return out;
}

/// Builds every allowed transition of the three lasers with its Rabi
/// frequency at `r` and its detuning. Detunings within roundoff of zero
/// (relative 1e-12 of the energies involved) are set to exactly zero.
inline CouplingMatrix assemble(const AssembleInput& in, Enantiomer who) {
  in.constants.validate();
  in.dipole.validate();
  CouplingMatrix h;
  h.basis = product_basis(in.truncation);
  const VibPair expected[3] = {{1, 2}, {2, 3}, {1, 3}};
  for (int k = 0; k < 3; ++k) {
    const LaserSpec& laser = in.lasers[static_cast<std::size_t>(k)];
    if (laser.drives != expected[k])
      throw Error(ErrorCode::InvalidArgument, "lasers must drive 1-2, 2-3 and 1-3 in that order");
    const auto transitions = allowed_transitions(laser, in.dipole, h.basis);
    std::size_t added = 0;
    for (const auto& t : transitions) {
      const cplx om = rabi_frequency(t.final_level, t.initial_level, laser, in.dipole, who, in.r);
      if (om == 0.0) continue;
      const double ea = level_energy(t.initial_level, in.vib, in.constants);
      const double eb = level_energy(t.final_level, in.vib, in.constants);
      const double vib_part = in.vib.at(t.initial_level.vib) - in.vib.at(t.final_level.vib) + laser.frequency;
      const double rot_part = rot_energy(t.initial_level.rot, in.constants) -
                              rot_energy(t.final_level.rot, in.constants);
      double delta = vib_part + rot_part;
      const double scale = std::max({std::abs(ea), std::abs(eb), std::abs(laser.frequency)});
      if (std::abs(delta) <= 1e-12 * scale) delta = 0.0;
      h.entries.push_back({h.index_of(t.initial_level), h.index_of(t.final_level), std::conj(om), delta, k});
      ++added;
    }
    if (added == 0)
      throw Error(ErrorCode::EmptyCoupling,
                  "laser " + std::string(k == 0 ? "12" : k == 1 ? "23" : "13") +
                      " drives no allowed transition in the truncated basis");
  }
  std::sort(h.entries.begin(), h.entries.end(), [](const CouplingEntry& x, const CouplingEntry& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return h;
}

/// Closed-form detuning printed for the symmetric top (uses B for the J part).
inline double detuning_formula(const RotState& final_rot, const RotState& initial_rot,
                               const RotorConstants& c) {
  const int jf = final_rot.J, ji = initial_rot.J, kf = final_rot.K, ki = initial_rot.K;
  return c.B * (jf * jf - ji * ji + jf - ji) + (c.A - c.B) * (kf * kf - ki * ki);
}

inline cplx entry_at(const CouplingEntry& e, double t_ns) {
  if (e.delta == 0.0) return e.omega;
  return e.omega * std::polar(1.0, -2.0 * std::numbers::pi * e.delta * t_ns);
}

/// H(t) with <a|H|b> = omega e^{-i 2 pi delta t} above the diagonal.
inline Eigen::SparseMatrix<cplx> evaluate(const CouplingMatrix& h, double t_ns) {
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(2 * h.entries.size());
  for (const auto& e : h.entries) {
    const cplx v = entry_at(e, t_ns);
    trip.emplace_back(static_cast<int>(e.a), static_cast<int>(e.b), v);
    trip.emplace_back(static_cast<int>(e.b), static_cast<int>(e.a), std::conj(v));
  }
  Eigen::SparseMatrix<cplx> m(static_cast<int>(h.size()), static_cast<int>(h.size()));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

inline Eigen::MatrixXcd evaluate_dense(const CouplingMatrix& h, double t_ns) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<int>(h.size()), static_cast<int>(h.size()));
  for (const auto& e : h.entries) {
    const cplx v = entry_at(e, t_ns);
    m(static_cast<int>(e.a), static_cast<int>(e.b)) = v;
    m(static_cast<int>(e.b), static_cast<int>(e.a)) = std::conj(v);
  }
  return m;
}

/// Sub-problem on the given basis states (any order; result is sorted).
inline CouplingMatrix restrict_to(const CouplingMatrix& h, std::vector<LevelIndex> states,
                                  bool zero_detuning = false) {
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  std::map<std::size_t, std::size_t> remap;
  for (std::size_t k = 0; k < states.size(); ++k) remap[h.index_of(states[k])] = k;
  CouplingMatrix out;
  out.basis = states;
  for (const auto& e : h.entries) {
    auto ia = remap.find(e.a), ib = remap.find(e.b);
    if (ia == remap.end() || ib == remap.end()) continue;
    CouplingEntry c = e;
    c.a = ia->second;
    c.b = ib->second;
    if (zero_detuning) c.delta = 0.0;
    out.entries.push_back(c);
  }
  return out;
}

/// Connected components of the coupling graph, each sorted, ordered by their
/// smallest index. Uncoupled states form singleton components.
inline std::vector<std::vector<std::size_t>> components(const CouplingMatrix& h) {
  const std::size_t n = h.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : h.entries) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<int> label(n, -1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<std::size_t> stack{s};
    label[s] = id;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      out.back().push_back(u);
      for (std::size_t v : adj[u])
        if (label[v] < 0) {
          label[v] = id;
          stack.push_back(v);
        }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

/// Potentials phi with delta_ab = phi_a - phi_b on every edge of the
/// component, if they exist (consistency within `tolerance` GHz). Then
/// H(t) = e^{-i 2 pi Phi t} H(0) e^{i 2 pi Phi t}.
inline std::optional<std::vector<double>> frame_potential(const CouplingMatrix& h,
                                                          const std::vector<std::size_t>& component,
                                                          double tolerance = 1e-9) {
  std::map<std::size_t, std::size_t> local;
  for (std::size_t k = 0; k < component.size(); ++k) local[component[k]] = k;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(component.size());
  for (const auto& e : h.entries) {
    auto ia = local.find(e.a);
    if (ia == local.end()) continue;
    const std::size_t b = local.at(e.b);
    adj[ia->second].push_back({b, -e.delta});  // phi_b = phi_a - delta
    adj[b].push_back({ia->second, e.delta});
  }
  std::vector<double> phi(component.size(), 0.0);
  std::vector<char> seen(component.size(), 0);
  if (component.empty()) return phi;
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (const auto& [v, d] : adj[u]) {
      const double want = phi[u] + d;
      if (!seen[v]) {
        seen[v] = 1;
        phi[v] = want;
        q.push(v);
      } else if (std::abs(phi[v] - want) > tolerance) {
        return std::nullopt;
      }
    }
  }
  return phi;
}

/// Graph over basis indices with an edge per allowed transition.
inline loops::Graph transition_graph(const CouplingMatrix& h) {
  loops::Graph g(static_cast<int>(h.size()));
  for (const auto& e : h.entries) g.add_edge(static_cast<int>(e.a), static_cast<int>(e.b));
  return g;
}

/// T|v J K M> = sign |v J K M'> over a basis: column b of T has `sign[b]` in
/// row `target[b]`.
struct SignedPermutation {
  std::vector<std::size_t> target;
  std::vector<double> sign;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
    for (std::size_t b = 0; b < target.size(); ++b)
      out[static_cast<Eigen::Index>(target[b])] += sign[b] * v[static_cast<Eigen::Index>(b)];
    return out;
  }
};

enum class SetupKind { DiagonalM, ReverseJ, ReverseJM };

/// Which catalogued transform handles the lasers' polarisations.
inline SetupKind classify_setup(const LaserSet& lasers) {
  std::set<Polarization> p;
  for (const auto& l : lasers) p.insert(l.polarization);
  if (p.count(Polarization::Custom))
    throw Error(ErrorCode::UnsupportedSetup, "no catalogued transform for custom polarisation");
  if (!p.count(Polarization::Z)) return SetupKind::DiagonalM;
  bool only_zy = true, only_zx = true;
  for (auto q : p) {
    if (q != Polarization::Z && q != Polarization::Y) only_zy = false;
    if (q != Polarization::Z && q != Polarization::X) only_zx = false;
  }
  if (only_zy) return SetupKind::ReverseJ;
  if (only_zx) return SetupKind::ReverseJM;
  std::string names;
  for (auto q : p) names += std::string(names.empty() ? "" : ",") + std::string(to_string(q));
  throw Error(ErrorCode::UnsupportedSetup, "no catalogued transform for polarisations {" + names + "}");
}

/// Unitary T with T^dagger H^L(t) T = H^R(t):
///   z and y/z setups        T|JKM> = (-1)^J |J K -M>
///   transverse-only setups  T|JKM> = (-1)^M |J K M>
///   x/z setups              T|JKM> = (-1)^(J+M) |J K -M>
/// combined with a vibrational sign when fewer than all three transitions
/// change sign between enantiomers.
inline SignedPermutation chirality_transform(const LaserSet& lasers, const DipoleModel& dipole,
                                             const std::vector<LevelIndex>& basis) {
  const SetupKind kind = classify_setup(lasers);
  // Rotational part negates every coupling; vibrational signs d_v restore the
  // unflagged ones: need d_v d_w = +1 on flagged pairs, -1 on the others.
  auto flagged = [&](VibPair p) { return dipole.at(p).chiral_flip; };
  const double d1 = 1.0;
  const double d2 = flagged({1, 2}) ? d1 : -d1;
  const double d3 = flagged({1, 3}) ? d1 : -d1;
  if ((d2 * d3 > 0) != flagged({2, 3}))
    throw Error(ErrorCode::UnsupportedSetup,
                "an even number of sign-changing transitions has no isospectral transform");
  const double dv[3] = {d1, d2, d3};

  SignedPermutation t;
  t.target.resize(basis.size());
  t.sign.resize(basis.size());
  std::map<LevelIndex, std::size_t> where;
  for (std::size_t k = 0; k < basis.size(); ++k) where[basis[k]] = k;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const LevelIndex& l = basis[k];
    LevelIndex image = l;
    int exponent = 0;
    switch (kind) {
      case SetupKind::DiagonalM: exponent = l.rot.M; break;
      case SetupKind::ReverseJ:
        exponent = l.rot.J;
        image.rot.M = -l.rot.M;
        break;
      case SetupKind::ReverseJM:
        exponent = l.rot.J + l.rot.M;
        image.rot.M = -l.rot.M;
        break;
    }
    auto it = where.find(image);
    if (it == where.end())
      throw Error(ErrorCode::InvalidArgument, "basis not closed under M -> -M");
    t.target[k] = it->second;
    t.sign[k] = ((exponent % 2 == 0) ? 1.0 : -1.0) * dv[l.vib - 1];
  }
  return t;
}

/// Frobenius norm of T^dagger H^L(t) T - H^R(t).
inline double transform_residual(const SignedPermutation& T, const CouplingMatrix& hl,
                                 const CouplingMatrix& hr, double t_ns) {
  if (hl.basis != hr.basis) throw Error(ErrorCode::InvalidArgument, "bases differ");
  // (T^dagger H T)_{ab} = s_a s_b H_{T(a) T(b)}
  const Eigen::SparseMatrix<cplx> l = evaluate(hl, t_ns);
  const Eigen::SparseMatrix<cplx> r = evaluate(hr, t_ns);
  std::map<std::pair<std::size_t, std::size_t>, cplx> diff;
  std::vector<std::size_t> inverse(T.target.size());
  for (std::size_t b = 0; b < T.target.size(); ++b) inverse[T.target[b]] = b;
  for (int k = 0; k < l.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(l, k); it; ++it) {
      const std::size_t a = inverse[static_cast<std::size_t>(it.row())];
      const std::size_t b = inverse[static_cast<std::size_t>(it.col())];
      diff[{a, b}] += T.sign[a] * T.sign[b] * it.value();
    }
  for (int k = 0; k < r.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(r, k); it; ++it)
      diff[{static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col())}] -= it.value();
  double s = 0.0;
  for (const auto& [key, v] : diff) s += std::norm(v);
  return std::sqrt(s);
}

/// CSV dump of the coupling table.
inline std::string couplings_csv(const CouplingMatrix& h) {
  std::ostringstream os;
  os << "a,b,laser,omega_re,omega_im,delta_ghz\n";
  os.setf(std::ios::scientific);
  os.precision(12);
  const char* names[3] = {"12", "23", "13"};
  for (const auto& e : h.entries)
    os << to_string(h.basis[e.a]) << ',' << to_string(h.basis[e.b]) << ','
       << names[e.laser] << ',' << e.omega.real() << ',' << e.omega.imag() << ',' << e.delta
       << '\n';
  return os.str();
}

}  // namespace chiralrot
