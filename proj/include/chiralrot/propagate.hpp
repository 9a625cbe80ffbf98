#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chiralrot/error.hpp"
#include "chiralrot/hamiltonian.hpp"
#include "chiralrot/rotbasis.hpp"
#include "chiralrot/units.hpp"

// Time evolution under H_int(t) and <H_int(t)> traces.
namespace chiralrot {

using StateVector = Eigen::VectorXcd;

/// n equally spaced samples on [0, t_end].
inline std::vector<double> linspace_times(double t_end, int samples) {
  if (samples < 2 || !(t_end > 0.0))
    throw Error(ErrorCode::InvalidArgument, "linspace_times: need t_end > 0 and samples >= 2");
  std::vector<double> t(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) t[static_cast<std::size_t>(k)] = t_end * k / (samples - 1);
  return t;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;
};

inline double max_norm_drift(const Trajectory& tr) {
  double d = 0.0;
  for (const auto& s : tr.states) d = std::max(d, std::abs(s.norm() - 1.0));
  return d;
}

enum class Method { Exact, Magnus4 };

namespace detail {

/// Entries of one component re-indexed to local positions.
inline std::vector<CouplingEntry> block_entries(const CouplingMatrix& h, const std::vector<std::size_t>& idx) {
  std::map<std::size_t, std::size_t> local;
  for (std::size_t k = 0; k < idx.size(); ++k) local[idx[k]] = k;
  std::vector<CouplingEntry> out;
  for (const auto& e : h.entries) {
    auto ia = local.find(e.a);
    if (ia == local.end()) continue;
    CouplingEntry c = e;
    c.a = ia->second;
    c.b = local.at(e.b);
    out.push_back(c);
  }
  return out;
}

inline Eigen::MatrixXcd dense_block(const std::vector<CouplingEntry>& entries, std::size_t n, double t) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : entries) {
    const cplx v = entry_at(e, t);
    m(static_cast<Eigen::Index>(e.a), static_cast<Eigen::Index>(e.b)) = v;
    m(static_cast<Eigen::Index>(e.b), static_cast<Eigen::Index>(e.a)) = std::conj(v);
  }
  return m;
}

inline Eigen::MatrixXcd expm_herm(const Eigen::MatrixXcd& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k);
  Eigen::VectorXcd ph(k.rows());
  for (Eigen::Index j = 0; j < k.rows(); ++j) ph[j] = std::polar(1.0, -es.eigenvalues()[j]);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Largest step accepted by the Magnus integrator: 1/(20 max(|Delta|, |Omega|)).
inline double magnus_max_step(const CouplingMatrix& h) {
  const double f = std::max(h.max_abs_delta(), h.max_abs_omega());
  return f > 0.0 ? 1.0 / (20.0 * f) : std::numeric_limits<double>::infinity();
}

/// Fourth-order Magnus step exp(-i K) over [t, t + dt] with two Gauss points,
/// K = pi dt (H1 + H2) - i (sqrt3/3) pi^2 dt^2 [H2, H1].
template <class HFn>
Eigen::MatrixXcd magnus4_step(const HFn& hfn, double t, double dt) {
  constexpr double pi = std::numbers::pi;
  const double s = std::sqrt(3.0) / 6.0;
  const Eigen::MatrixXcd h1 = hfn(t + (0.5 - s) * dt);
  const Eigen::MatrixXcd h2 = hfn(t + (0.5 + s) * dt);
  const Eigen::MatrixXcd comm = h2 * h1 - h1 * h2;
  Eigen::MatrixXcd k = pi * dt * (h1 + h2) - cplx(0.0, std::sqrt(3.0) / 3.0 * pi * pi * dt * dt) * comm;
  k = 0.5 * (k + k.adjoint()).eval();
  return detail::expm_herm(k);
}

/// Exact evolution per connected component. Where detunings derive from a
/// frame potential phi the problem is time independent in the frame
/// chi = e^{i 2 pi Phi t} psi, with generator H(0) - Phi; other components
/// fall back to Magnus-4 stepping.
class Evolver {
 public:
  struct Block {
    std::vector<std::size_t> idx;
    std::vector<double> phi;  // empty when no frame potential exists
    Eigen::VectorXd lambda;   // eigenvalues of H(0) - Phi
    Eigen::MatrixXcd v;       // eigenvectors
    Eigen::MatrixXcd g;       // V^dag H(0) V
    std::vector<CouplingEntry> entries;  // local indices
  };

  explicit Evolver(CouplingMatrix h) : h_(std::move(h)) {
    for (auto& c : components(h_)) {
      if (c.size() == 1) continue;  // isolated state: H row is zero
      Block b;
      b.idx = std::move(c);
      b.entries = detail::block_entries(h_, b.idx);
      const Eigen::MatrixXcd h0 = detail::dense_block(b.entries, b.idx.size(), 0.0);
      if (auto phi = frame_potential(h_, b.idx)) {
        b.phi = std::move(*phi);
        Eigen::MatrixXcd k = h0;
        for (std::size_t j = 0; j < b.phi.size(); ++j) k(j, j) -= b.phi[j];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k);
        b.lambda = es.eigenvalues();
        b.v = es.eigenvectors();
        b.g = b.v.adjoint() * h0 * b.v;
      }
      blocks_.push_back(std::move(b));
    }
    magnus_dt_ = magnus_max_step(h_) / 16.0;
  }

  const CouplingMatrix& hamiltonian() const { return h_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  bool all_exact() const {
    return std::all_of(blocks_.begin(), blocks_.end(), [](const Block& b) { return !b.phi.empty(); });
  }

  /// psi(t) at each requested time (ascending).
  std::vector<StateVector> evolve(const StateVector& psi0, const std::vector<double>& times) const {
    check_size(psi0);
    std::vector<StateVector> out(times.size(), psi0);
    for (const auto& b : blocks_) {
      const Eigen::VectorXcd p0 = gather(b, psi0);
      if (p0.squaredNorm() == 0.0) continue;
      if (!b.phi.empty()) {
        const Eigen::VectorXcd a = b.v.adjoint() * p0;
        for (std::size_t k = 0; k < times.size(); ++k) {
          const double t = times[k];
          Eigen::VectorXcd c(a.size());
          for (Eigen::Index j = 0; j < a.size(); ++j)
            c[j] = a[j] * std::polar(1.0, -units::two_pi * b.lambda[j] * t);
          Eigen::VectorXcd chi = b.v * c;
          for (Eigen::Index j = 0; j < chi.size(); ++j)
            chi[j] *= std::polar(1.0, -units::two_pi * b.phi[static_cast<std::size_t>(j)] * t);
          scatter(b, chi, out[k]);
        }
      } else {
        const auto states = magnus_block(b, p0, times);
        for (std::size_t k = 0; k < times.size(); ++k) scatter(b, states[k], out[k]);
      }
    }
    return out;
  }

  double magnus_substep() const { return magnus_dt_; }

  Eigen::VectorXcd gather(const Block& b, const StateVector& psi) const {
    Eigen::VectorXcd p(static_cast<Eigen::Index>(b.idx.size()));
    for (std::size_t k = 0; k < b.idx.size(); ++k) p[static_cast<Eigen::Index>(k)] = psi[static_cast<Eigen::Index>(b.idx[k])];
    return p;
  }

  std::vector<Eigen::VectorXcd> magnus_block(const Block& b, const Eigen::VectorXcd& p0,
                                             const std::vector<double>& times) const {
    auto hfn = [&](double t) { return detail::dense_block(b.entries, b.idx.size(), t); };
    std::vector<Eigen::VectorXcd> out;
    out.reserve(times.size());
    Eigen::VectorXcd p = p0;
    double t = 0.0;
    for (double target : times) {
      if (target < t) throw Error(ErrorCode::InvalidArgument, "evolve: times must be ascending");
      const double span = target - t;
      if (span > 0.0) {
        const auto n = static_cast<int>(std::ceil(span / magnus_dt_ - 1e-12));
        const double dt = span / n;
        for (int s = 0; s < n; ++s) p = magnus4_step(hfn, t + s * dt, dt) * p;
        t = target;
      }
      out.push_back(p);
    }
    return out;
  }

 private:
  void check_size(const StateVector& psi) const {
    if (static_cast<std::size_t>(psi.size()) != h_.size())
      throw Error(ErrorCode::InvalidArgument, "state size does not match the basis");
  }

  void scatter(const Block& b, const Eigen::VectorXcd& p, StateVector& psi) const {
    for (std::size_t k = 0; k < b.idx.size(); ++k) psi[static_cast<Eigen::Index>(b.idx[k])] = p[static_cast<Eigen::Index>(k)];
  }

  CouplingMatrix h_;
  std::vector<Block> blocks_;
  double magnus_dt_ = 0.0;
};

/// Trajectory sampled every dt (shrunk so that t_end is hit exactly).
/// Magnus4 steps with dt itself and signals StepTooLarge when dt exceeds
/// magnus_max_step; Exact uses dt only as the sampling interval.
inline Trajectory propagate(const CouplingMatrix& h, const StateVector& psi0, double t_end, double dt,
                            Method method = Method::Exact) {
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw Error(ErrorCode::InvalidArgument, "propagate: need dt > 0 and t_end > 0");
  if (static_cast<std::size_t>(psi0.size()) != h.size())
    throw Error(ErrorCode::InvalidArgument, "propagate: state size does not match the basis");
  const auto n = static_cast<int>(std::ceil(t_end / dt - 1e-9));
  Trajectory tr;
  tr.times = linspace_times(t_end, n + 1);
  if (method == Method::Exact) {
    tr.states = Evolver(h).evolve(psi0, tr.times);
    return tr;
  }
  const double step = t_end / n;
  if (step > magnus_max_step(h) * (1.0 + 1e-12))
    throw Error(ErrorCode::StepTooLarge, "propagate: dt = " + std::to_string(step) +
                                             " ns exceeds 1/(20 max(|Delta|,|Omega|)) = " +
                                             std::to_string(magnus_max_step(h)) + " ns");
  auto hfn = [&](double t) { return evaluate_dense(h, t); };
  tr.states.reserve(tr.times.size());
  StateVector p = psi0;
  tr.states.push_back(p);
  for (int s = 0; s < n; ++s) {
    p = magnus4_step(hfn, tr.times[static_cast<std::size_t>(s)], step) * p;
    tr.states.push_back(p);
  }
  return tr;
}

struct PotentialTrace {
  std::vector<double> times;   // ns
  std::vector<double> values;  // <H_int(t)> / omega_unit
  double time_average = 0.0;   // continuous mean over [0, window]
  double window = 0.0;         // ns
  double sample_mean = 0.0;    // arithmetic mean of values
  double max_imag = 0.0;       // largest imaginary residue seen, same units
};

namespace detail {

inline double trapezoid_mean(const std::vector<double>& t, const std::vector<double>& v, double window) {
  double acc = 0.0, span = 0.0;
  for (std::size_t k = 1; k < t.size() && t[k] <= window * (1.0 + 1e-12); ++k) {
    acc += 0.5 * (v[k] + v[k - 1]) * (t[k] - t[k - 1]);
    span = t[k];
  }
  return span > 0.0 ? acc / span : (v.empty() ? 0.0 : v[0]);
}

inline void finish_means(PotentialTrace& tr) {
  double s = 0.0;
  for (double v : tr.values) s += v;
  tr.sample_mean = tr.values.empty() ? 0.0 : s / static_cast<double>(tr.values.size());
}

}  // namespace detail

/// values[k] = <psi_k|H(t_k)|psi_k> / omega_unit; the average is the
/// trapezoid mean over [0, window] (window <= 0 means the full run).
inline PotentialTrace potential_trace(const CouplingMatrix& h, const Trajectory& tr, double omega_unit,
                                      double window = 0.0) {
  PotentialTrace out;
  out.times = tr.times;
  out.values.reserve(tr.times.size());
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const auto& psi = tr.states[k];
    cplx e = 0.0;
    for (const auto& c : h.entries) {
      const cplx w = conj(psi[static_cast<Eigen::Index>(c.a)]) * entry_at(c, tr.times[k]) *
                     psi[static_cast<Eigen::Index>(c.b)];
      e += w + std::conj(w);
    }
    out.values.push_back(e.real() / omega_unit);
    out.max_imag = std::max(out.max_imag, std::abs(e.imag()) / omega_unit);
  }
  out.window = window > 0.0 ? window : (tr.times.empty() ? 0.0 : tr.times.back());
  out.time_average = detail::trapezoid_mean(out.times, out.values, out.window);
  detail::finish_means(out);
  return out;
}

/// Averaging window snapped to a whole number of periods of the dominant
/// detuning (the nonzero |Delta| carrying the most |Omega|^2). Falls back to
/// t_end when no detuning exists or not even one period fits.
inline double snapped_window(const CouplingMatrix& h, double t_end) {
  std::map<double, double> weight;
  for (const auto& e : h.entries)
    if (e.delta != 0.0) weight[std::abs(e.delta)] += std::norm(e.omega);
  if (weight.empty()) return t_end;
  auto best = std::max_element(weight.begin(), weight.end(),
                               [](const auto& x, const auto& y) { return x.second < y.second; });
  const double period = 1.0 / best->first;
  const double n = std::floor(t_end / period + 1e-9);
  return n >= 1.0 ? n * period : t_end;
}

struct EnsembleMember {
  double weight = 0.0;
  StateVector state;
  LevelIndex label;  // bare state the member was prepared from
};

struct Ensemble {
  std::vector<EnsembleMember> members;
  double dropped_weight = 0.0;
  std::vector<std::string> warnings;
};

enum class Preparation { Adiabatic, Diabatic, PartiallyDressed };

inline std::string to_string(Preparation p) {
  switch (p) {
    case Preparation::Adiabatic: return "adiabatic";
    case Preparation::Diabatic: return "diabatic";
    case Preparation::PartiallyDressed: return "partially-dressed";
  }
  return "?";
}

inline Preparation parse_preparation(const std::string& s) {
  if (s == "adiabatic") return Preparation::Adiabatic;
  if (s == "diabatic") return Preparation::Diabatic;
  if (s == "partially-dressed") return Preparation::PartiallyDressed;
  throw Error(ErrorCode::InvalidArgument, "unknown preparation '" + s + "'");
}

struct PrepareOptions {
  int initial_vib = 1;
  double weight_cutoff = 1e-12;  // thermal members below this are dropped
  double cluster_tolerance = 1e-9;  // relative to max|Omega|
};

/// Thermal ensemble of initial states. The rotational populations sit on
/// `initial_vib`; partially-dressed members are chi (vibrational amplitudes
/// for levels 1..3) times the rotational state. Adiabatic members are the
/// normalised projection of the bare state onto the H(0) eigenspace it
/// overlaps most; ties go to the lower eigenvalue and are reported.
inline Ensemble prepare_initial(Preparation mode, const CouplingMatrix& h, const ThermalRotState& thermal,
                                const std::optional<Eigen::Vector3cd>& chi = std::nullopt,
                                const PrepareOptions& opt = {}) {
  if (mode == Preparation::PartiallyDressed && !chi)
    throw Error(ErrorCode::InvalidArgument, "partially-dressed preparation needs a dressed state");
  Ensemble ens;
  double kept = 0.0;
  std::vector<std::pair<double, RotState>> pop;
  for (std::size_t k = 0; k < thermal.states.size(); ++k) {
    if (thermal.probabilities[k] < opt.weight_cutoff) {
      ens.dropped_weight += thermal.probabilities[k];
      continue;
    }
    pop.emplace_back(thermal.probabilities[k], thermal.states[k]);
    kept += thermal.probabilities[k];
  }

  const auto n = static_cast<Eigen::Index>(h.size());
  std::vector<std::vector<std::size_t>> comps;
  std::vector<int> comp_of(h.size(), -1);
  std::vector<std::optional<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>>> eig;
  std::vector<Eigen::Index> local(h.size(), -1);
  if (mode == Preparation::Adiabatic) {
    comps = components(h);
    eig.resize(comps.size());
    for (std::size_t c = 0; c < comps.size(); ++c)
      for (std::size_t k = 0; k < comps[c].size(); ++k) {
        comp_of[comps[c][k]] = static_cast<int>(c);
        local[comps[c][k]] = static_cast<Eigen::Index>(k);
      }
  }
  const double tol = opt.cluster_tolerance * std::max(h.max_abs_omega(), 1e-300);

  for (const auto& [w, rot] : pop) {
    EnsembleMember m;
    m.weight = w / kept;
    m.label = {opt.initial_vib, rot};
    m.state = StateVector::Zero(n);
    const std::size_t bare = h.index_of(m.label);
    switch (mode) {
      case Preparation::Diabatic:
        m.state[static_cast<Eigen::Index>(bare)] = 1.0;
        break;
      case Preparation::PartiallyDressed:
        for (int v = 1; v <= 3; ++v) m.state[static_cast<Eigen::Index>(h.index_of({v, rot}))] = (*chi)[v - 1];
        break;
      case Preparation::Adiabatic: {
        const auto c = static_cast<std::size_t>(comp_of[bare]);
        const auto& idx = comps[c];
        if (idx.size() == 1) {
          m.state[static_cast<Eigen::Index>(bare)] = 1.0;
          break;
        }
        if (!eig[c]) eig[c].emplace(detail::dense_block(detail::block_entries(h, idx), idx.size(), 0.0));
        const auto& es = *eig[c];
        const Eigen::Index j0 = local[bare];
        // Walk eigenvalue clusters; keep the projection of largest norm.
        Eigen::VectorXcd best;
        double best_norm = -1.0, best_lambda = 0.0;
        bool tie = false;
        const Eigen::Index d = es.eigenvalues().size();
        for (Eigen::Index lo = 0; lo < d;) {
          Eigen::Index hi = lo + 1;
          while (hi < d && es.eigenvalues()[hi] - es.eigenvalues()[hi - 1] <= tol) ++hi;
          const auto vcl = es.eigenvectors().middleCols(lo, hi - lo);
          const Eigen::VectorXcd proj = vcl * vcl.row(j0).adjoint();
          const double pn = proj.norm();
          if (pn > best_norm + 1e-9) {
            best = proj;
            best_norm = pn;
            best_lambda = es.eigenvalues()[lo];
            tie = false;
          } else if (std::abs(pn - best_norm) <= 1e-9) {
            tie = true;
          }
          lo = hi;
        }
        if (tie)
          ens.warnings.push_back("degenerate-eigenstate: ambiguous adiabatic assignment for " +
                                 to_string(m.label) + ", took eigenvalue " + std::to_string(best_lambda));
        best /= best_norm;
        for (std::size_t k = 0; k < idx.size(); ++k)
          m.state[static_cast<Eigen::Index>(idx[k])] = best[static_cast<Eigen::Index>(k)];
        break;
      }
    }
    ens.members.push_back(std::move(m));
  }
  return ens;
}

/// Weighted pointwise mean; signals MismatchedGrid when time grids differ.
inline PotentialTrace ensemble_average(const std::vector<std::pair<double, PotentialTrace>>& traces) {
  if (traces.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble_average: no traces");
  const auto& ref = traces.front().second;
  PotentialTrace out;
  out.times = ref.times;
  out.window = ref.window;
  out.values.assign(ref.times.size(), 0.0);
  double wsum = 0.0;
  for (const auto& [w, tr] : traces) {
    if (tr.times.size() != ref.times.size())
      throw Error(ErrorCode::MismatchedGrid, "ensemble_average: trace lengths differ");
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      if (std::abs(tr.times[k] - ref.times[k]) > 1e-12 * std::max(1.0, std::abs(ref.times[k])))
        throw Error(ErrorCode::MismatchedGrid, "ensemble_average: time grids differ at sample " + std::to_string(k));
    if (tr.window != ref.window)
      throw Error(ErrorCode::MismatchedGrid, "ensemble_average: averaging windows differ");
    for (std::size_t k = 0; k < tr.values.size(); ++k) out.values[k] += w * tr.values[k];
    out.time_average += w * tr.time_average;
    out.max_imag = std::max(out.max_imag, tr.max_imag);
    wsum += w;
  }
  for (double& v : out.values) v /= wsum;
  out.time_average /= wsum;
  detail::finish_means(out);
  return out;
}

/// Ensemble trace computed directly from block density matrices:
/// <H>(t) = sum_jk rho~_kj G_jk e^{i 2 pi (l_j - l_k) t}, whose continuous
/// mean over [0, W] is analytic. Blocks without a frame potential are
/// stepped member by member.
inline PotentialTrace ensemble_trace(const Evolver& ev, const Ensemble& ens, const std::vector<double>& times,
                                     double omega_unit, double window = 0.0) {
  PotentialTrace out;
  out.times = times;
  out.window = window > 0.0 ? window : times.back();
  std::vector<cplx> acc(times.size(), 0.0);
  cplx avg = 0.0;
  double wsum = 0.0;
  for (const auto& m : ens.members) wsum += m.weight;
  bool sampled_average = false;

  for (const auto& b : ev.blocks()) {
    const auto nb = static_cast<Eigen::Index>(b.idx.size());
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(nb, nb);
    bool any = false;
    for (const auto& m : ens.members) {
      const Eigen::VectorXcd p = ev.gather(b, m.state);
      if (p.squaredNorm() == 0.0) continue;
      any = true;
      if (b.phi.empty()) {
        const auto states = ev.magnus_block(b, p, times);
        for (std::size_t k = 0; k < times.size(); ++k) {
          const Eigen::MatrixXcd hk = detail::dense_block(b.entries, b.idx.size(), times[k]);
          acc[k] += m.weight / wsum * states[k].dot(hk * states[k]);
        }
        sampled_average = true;
      } else {
        rho.noalias() += (m.weight / wsum) * p * p.adjoint();
      }
    }
    if (!any || b.phi.empty()) continue;
    const Eigen::MatrixXcd rt = b.v.adjoint() * rho * b.v;
    const Eigen::MatrixXcd mm = rt.transpose().cwiseProduct(b.g);
    // Skip eigen-directions carrying no population.
    std::vector<Eigen::Index> live;
    for (Eigen::Index j = 0; j < nb; ++j)
      if (rt(j, j).real() > 1e-300) live.push_back(j);
    const auto nl = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXcd ml(nl, nl);
    for (Eigen::Index j = 0; j < nl; ++j)
      for (Eigen::Index k = 0; k < nl; ++k) ml(j, k) = mm(live[j], live[k]);
    Eigen::MatrixXcd u(nl, static_cast<Eigen::Index>(times.size()));
    for (Eigen::Index j = 0; j < nl; ++j)
      for (std::size_t k = 0; k < times.size(); ++k)
        u(j, static_cast<Eigen::Index>(k)) = std::polar(1.0, -units::two_pi * b.lambda[live[j]] * times[k]);
    const Eigen::MatrixXcd mu = ml * u;
    for (std::size_t k = 0; k < times.size(); ++k)
      acc[k] += u.col(static_cast<Eigen::Index>(k)).dot(mu.col(static_cast<Eigen::Index>(k)));
    for (Eigen::Index j = 0; j < nl; ++j)
      for (Eigen::Index k = 0; k < nl; ++k) {
        const double x = units::two_pi * (b.lambda[live[j]] - b.lambda[live[k]]) * out.window;
        const cplx f = std::abs(x) < 1e-8 ? cplx(1.0, 0.5 * x)
                                          : (std::polar(1.0, x) - 1.0) / cplx(0.0, x);
        avg += ml(j, k) * f;
      }
  }
  out.values.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    out.values[k] = acc[k].real() / omega_unit;
    out.max_imag = std::max(out.max_imag, std::abs(acc[k].imag()) / omega_unit);
  }
  if (sampled_average) {
    // Mixed exact/stepped blocks: fall back to the trapezoid mean.
    out.time_average = detail::trapezoid_mean(out.times, out.values, out.window);
  } else {
    out.time_average = avg.real() / omega_unit;
  }
  detail::finish_means(out);
  return out;
}

}  // namespace chiralrot
