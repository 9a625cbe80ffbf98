#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chiralrot/error.hpp"

// Spectra of small closed-loop Hamiltonians and cycle search in transition
// graphs.
namespace chiralrot::loops {

using cplx = std::complex<double>;

struct Edge {
  int a = 0;
  int b = 0;

  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

/// Resonant N-level Hamiltonian: omega(a, b) for a < b is the coupling as
/// given, the lower triangle is its conjugate, the diagonal is zero.
class LoopHamiltonian {
 public:
  explicit LoopHamiltonian(int n) : omega_(Eigen::MatrixXcd::Zero(n, n)) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "LoopHamiltonian: n < 1");
  }

  int size() const { return static_cast<int>(omega_.rows()); }

  void set(int a, int b, cplx w) {
    check(a, b);
    if (a > b) {
      std::swap(a, b);
      w = std::conj(w);
    }
    omega_(a, b) = w;
    omega_(b, a) = std::conj(w);
  }

  /// Coupling <a|H|b>.
  cplx get(int a, int b) const {
    check(a, b);
    return omega_(a, b);
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (int a = 0; a < size(); ++a)
      for (int b = a + 1; b < size(); ++b)
        if (omega_(a, b) != 0.0) out.push_back({a, b});
    return out;
  }

  const Eigen::MatrixXcd& matrix() const { return omega_; }

 private:
  void check(int a, int b) const {
    if (a < 0 || b < 0 || a >= size() || b >= size() || a == b)
      throw Error(ErrorCode::InvalidArgument, "LoopHamiltonian: bad edge");
  }

  Eigen::MatrixXcd omega_;
};

/// Ring 0-1-...-(n-1)-0 with weights[k] on edge (k, k+1 mod n), read in the
/// direction of travel.
inline LoopHamiltonian ring(const std::vector<cplx>& weights) {
  const int n = static_cast<int>(weights.size());
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "ring: need at least 3 edges");
  LoopHamiltonian h(n);
  for (int k = 0; k < n; ++k) h.set(k, (k + 1) % n, weights[static_cast<std::size_t>(k)]);
  return h;
}

/// Sorted real eigenvalues.
inline std::vector<double> spectrum(const LoopHamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.matrix(), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end());
  return out;
}

inline double spectral_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k)
    d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

/// Smallest separation between neighbouring eigenvalues.
inline double spectral_gap(const std::vector<double>& s) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < s.size(); ++k) g = std::min(g, s[k] - s[k - 1]);
  return g;
}

struct SignPattern {
  std::vector<Edge> flips;

  std::size_t count() const { return flips.size(); }
};

inline LoopHamiltonian apply_flips(const LoopHamiltonian& h, const SignPattern& p) {
  LoopHamiltonian out = h;
  for (const auto& e : p.flips) {
    const cplx w = h.get(e.a, e.b);
    if (w == 0.0)
      throw Error(ErrorCode::InvalidArgument,
                  "sign pattern flips an edge without coupling: " + std::to_string(e.a) +
                      "-" + std::to_string(e.b));
    out.set(e.a, e.b, -w);
  }
  return out;
}

/// True when the flips equal a conjugation by a diagonal +-1 matrix, i.e.
/// every cycle of the coupling graph contains an even number of them.
inline bool gauge_removable(const LoopHamiltonian& h, const SignPattern& p) {
  const int n = h.size();
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> flipped(static_cast<std::size_t>(n),
                                        std::vector<int>(static_cast<std::size_t>(n), 0));
  for (const auto& e : p.flips) {
    flipped[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(e.b)] ^= 1;
    flipped[static_cast<std::size_t>(e.b)][static_cast<std::size_t>(e.a)] ^= 1;
  }
  for (const auto& e : h.edges()) {
    const int f = flipped[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(e.b)];
    adj[static_cast<std::size_t>(e.a)].push_back({e.b, f});
    adj[static_cast<std::size_t>(e.b)].push_back({e.a, f});
  }
  std::vector<int> colour(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < n; ++s) {
    if (colour[static_cast<std::size_t>(s)] >= 0) continue;
    colour[static_cast<std::size_t>(s)] = 0;
    std::vector<int> stack{s};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& [v, f] : adj[static_cast<std::size_t>(u)]) {
        const int want = colour[static_cast<std::size_t>(u)] ^ f;
        int& c = colour[static_cast<std::size_t>(v)];
        if (c < 0) {
          c = want;
          stack.push_back(v);
        } else if (c != want) {
          return false;
        }
      }
    }
  }
  return true;
}

enum class FlipEffect { SpectrumChanged, SpectrumUnchanged };

inline const char* to_string(FlipEffect e) {
  return e == FlipEffect::SpectrumChanged ? "spectrum-changed" : "spectrum-unchanged";
}

/// Compares sorted spectra before and after the flips. A spectrum that stays
/// put although some loop phase changed sign is reported as Indeterminate.
inline FlipEffect flip_sensitivity(const LoopHamiltonian& h, const SignPattern& p,
                                   double tolerance = 1e-9) {
  const double d = spectral_distance(spectrum(h), spectrum(apply_flips(h, p)));
  if (d > tolerance) return FlipEffect::SpectrumChanged;
  if (!gauge_removable(h, p))
    throw Error(ErrorCode::Indeterminate,
                "flip_sensitivity: loop phase changed but spectra agree to " +
                    std::to_string(d) + "; perturb the couplings and retry");
  return FlipEffect::SpectrumUnchanged;
}

/// Product of couplings <c0|H|c1><c1|H|c2>...<ck|H|c0> around a closed path.
inline cplx loop_product(const LoopHamiltonian& h, const std::vector<int>& cycle) {
  cplx p = 1.0;
  for (std::size_t k = 0; k < cycle.size(); ++k)
    p *= h.get(cycle[k], cycle[(k + 1) % cycle.size()]);
  return p;
}

inline double loop_phase(const LoopHamiltonian& h, const std::vector<int>& cycle) {
  return std::arg(loop_product(h, cycle));
}

struct GenericDraw {
  double min_magnitude = 0.5;
  double max_magnitude = 1.5;
  double min_gap = 1e-6;
  double min_abs_cos_phase = 0.1;
  int max_attempts = 1000;
};

/// Ring weights with magnitudes in [min, max] and uniform phases, redrawn
/// until the spectrum is non-degenerate and the loop product is not close to
/// purely imaginary (where odd flips barely move the spectrum).
inline std::vector<cplx> generic_ring_weights(int n, std::mt19937_64& rng,
                                              const GenericDraw& opt = {}) {
  std::uniform_real_distribution<double> mag(opt.min_magnitude, opt.max_magnitude);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  std::vector<int> cycle(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) cycle[static_cast<std::size_t>(k)] = k;
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    std::vector<cplx> w(static_cast<std::size_t>(n));
    for (auto& x : w) x = std::polar(mag(rng), phase(rng));
    const auto h = ring(w);
    if (spectral_gap(spectrum(h)) < opt.min_gap) continue;
    if (std::abs(std::cos(loop_phase(h, cycle))) < opt.min_abs_cos_phase) continue;
    return w;
  }
  throw Error(ErrorCode::Indeterminate, "generic_ring_weights: no generic draw found");
}

/// Every subset of the ring's edges, as bit masks 0 .. 2^n - 1.
inline SignPattern ring_pattern(int n, unsigned mask) {
  SignPattern p;
  for (int k = 0; k < n; ++k)
    if (mask & (1u << k)) p.flips.push_back({k, (k + 1) % n});
  return p;
}

struct FlipRow {
  int n = 0;
  int draw = 0;
  unsigned mask = 0;
  int flips = 0;
  FlipEffect effect = FlipEffect::SpectrumUnchanged;
  double distance = 0.0;
  bool parity_consistent = true;
};

/// Classification table for all sign patterns on rings of the given sizes.
inline std::vector<FlipRow> flip_table(const std::vector<int>& sizes, int draws,
                                       std::uint64_t seed, const GenericDraw& opt = {}) {
  std::mt19937_64 rng(seed);
  std::vector<FlipRow> rows;
  for (int n : sizes)
    for (int d = 0; d < draws; ++d) {
      const auto h = ring(generic_ring_weights(n, rng, opt));
      const auto base = spectrum(h);
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        const auto p = ring_pattern(n, mask);
        FlipRow r;
        r.n = n;
        r.draw = d;
        r.mask = mask;
        r.flips = static_cast<int>(p.count());
        r.distance = spectral_distance(base, spectrum(apply_flips(h, p)));
        r.effect = flip_sensitivity(h, p);
        r.parity_consistent =
            (r.flips % 2 == 1) == (r.effect == FlipEffect::SpectrumChanged);
        rows.push_back(r);
      }
    }
  return rows;
}

inline std::string flip_table_csv(const std::vector<FlipRow>& rows) {
  std::ostringstream os;
  os << "n,draw,mask,flips,parity,classification,spectral_distance,consistent\n";
  os.setf(std::ios::scientific);
  os.precision(12);
  for (const auto& r : rows)
    os << r.n << ',' << r.draw << ',' << r.mask << ',' << r.flips << ','
       << (r.flips % 2 ? "odd" : "even") << ',' << to_string(r.effect) << ','
       << r.distance << ',' << (r.parity_consistent ? "yes" : "no") << '\n';
  return os.str();
}

/// Undirected simple graph on vertices 0 .. n-1.
class Graph {
 public:
  explicit Graph(int n = 0) : adj_(static_cast<std::size_t>(n)) {}

  int size() const { return static_cast<int>(adj_.size()); }

  void add_edge(int a, int b) {
    if (a == b || a < 0 || b < 0 || a >= size() || b >= size())
      throw Error(ErrorCode::InvalidArgument, "Graph: bad edge");
    auto& la = adj_[static_cast<std::size_t>(a)];
    if (std::find(la.begin(), la.end(), b) != la.end()) return;
    la.insert(std::upper_bound(la.begin(), la.end(), b), b);
    auto& lb = adj_[static_cast<std::size_t>(b)];
    lb.insert(std::upper_bound(lb.begin(), lb.end(), a), a);
  }

  bool has_edge(int a, int b) const {
    const auto& la = adj_[static_cast<std::size_t>(a)];
    return std::binary_search(la.begin(), la.end(), b);
  }

  const std::vector<int>& neighbours(int v) const { return adj_[static_cast<std::size_t>(v)]; }

  std::size_t edge_count() const {
    std::size_t m = 0;
    for (const auto& l : adj_) m += l.size();
    return m / 2;
  }

 private:
  std::vector<std::vector<int>> adj_;
};

struct LoopSearch {
  int max_length = 8;
  std::optional<int> through;     // only cycles containing this vertex
  std::size_t max_cycles = 100000;
};

/// Simple cycles of length 3 .. max_length, each listed once: starting at its
/// smallest vertex (or at `through`) and oriented so the second vertex is
/// smaller than the last. Output order is deterministic.
inline std::vector<std::vector<int>> find_loops(const Graph& g, const LoopSearch& opt = {}) {
  std::vector<std::vector<int>> out;
  std::vector<char> on_path(static_cast<std::size_t>(g.size()), 0);
  std::vector<int> path;

  auto search_from = [&](int start, bool smallest_rule) {
    // Iterative DFS keeping a neighbour cursor per depth.
    path.assign(1, start);
    on_path[static_cast<std::size_t>(start)] = 1;
    std::vector<std::size_t> cursor{0};
    while (!path.empty()) {
      if (out.size() >= opt.max_cycles) break;
      const int u = path.back();
      const auto& nb = g.neighbours(u);
      std::size_t& c = cursor.back();
      if (c >= nb.size()) {
        on_path[static_cast<std::size_t>(u)] = 0;
        path.pop_back();
        cursor.pop_back();
        continue;
      }
      const int v = nb[c++];
      if (v == start) {
        if (path.size() >= 3 && path[1] < path.back()) out.push_back(path);
        continue;
      }
      if (on_path[static_cast<std::size_t>(v)]) continue;
      if (smallest_rule && v < start) continue;
      if (static_cast<int>(path.size()) >= opt.max_length) continue;
      path.push_back(v);
      on_path[static_cast<std::size_t>(v)] = 1;
      cursor.push_back(0);
    }
    for (int v : path) on_path[static_cast<std::size_t>(v)] = 0;
  };

  if (opt.through) {
    if (*opt.through < 0 || *opt.through >= g.size())
      throw Error(ErrorCode::InvalidArgument, "find_loops: vertex out of range");
    search_from(*opt.through, false);
  } else {
    for (int s = 0; s < g.size() && out.size() < opt.max_cycles; ++s) search_from(s, true);
  }
  return out;
}

}  // namespace chiralrot::loops
