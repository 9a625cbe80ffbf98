#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chiralrot/coupling.hpp"
#include "chiralrot/error.hpp"

// Rotationless three-level reference: dressed states of the resonant 3x3
// Hamiltonian as functions of transverse position, and the scalar and vector
// potentials they induce.
namespace chiralrot::dressed {

using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;

/// Rabi frequencies Omega_12, Omega_23, Omega_13 at one point, each the
/// element <upper|H|lower>.
struct LoopOmegas {
  cplx o12 = 0.0;
  cplx o23 = 0.0;
  cplx o13 = 0.0;

  double max_abs() const { return std::max({std::abs(o12), std::abs(o23), std::abs(o13)}); }
};

/// Resonant H_int: zero diagonal, H(1,0) = O12, H(2,1) = O23, H(2,0) = O13.
inline Matrix3c loop_matrix(const LoopOmegas& w) {
  Matrix3c h = Matrix3c::Zero();
  h(1, 0) = w.o12;
  h(2, 1) = w.o23;
  h(2, 0) = w.o13;
  h(0, 1) = std::conj(w.o12);
  h(1, 2) = std::conj(w.o23);
  h(0, 2) = std::conj(w.o13);
  return h;
}

struct Dressing {
  Eigen::Vector3d eigenvalues;  // ascending
  Matrix3c eigenvectors;        // column n is chi_n
  bool degenerate = false;
};

/// Diagonalise H_int. Each eigenvector has its largest-magnitude component
/// made real positive. `degenerate` is set when the smallest gap falls below
/// 1e-9 max|Omega| (or all couplings vanish).
inline Dressing dress(const LoopOmegas& w) {
  Eigen::SelfAdjointEigenSolver<Matrix3c> es(loop_matrix(w));
  Dressing d;
  d.eigenvalues = es.eigenvalues();
  d.eigenvectors = es.eigenvectors();
  for (int n = 0; n < 3; ++n) {
    Eigen::Index k = 0;
    d.eigenvectors.col(n).cwiseAbs().maxCoeff(&k);
    const cplx c = d.eigenvectors(k, n);
    d.eigenvectors.col(n) *= std::conj(c) / std::abs(c);
    d.eigenvectors(k, n) = std::abs(c);
  }
  const double gap = std::min(d.eigenvalues[1] - d.eigenvalues[0],
                              d.eigenvalues[2] - d.eigenvalues[1]);
  const double scale = w.max_abs();
  d.degenerate = scale == 0.0 || gap < 1e-9 * scale;
  return d;
}

inline LaserSpec shifted_beam(VibPair drives, double center_x) {
  LaserSpec l = LaserSpec::with_polarization(Polarization::Z, drives);
  l.beam.center_x = center_x;
  return l;
}

/// The three laser fields driving the rotationless loop. Defaults: unit
/// peaks, waist 1, centres 0 (1-2), -0.5 (2-3) and +0.5 (1-3).
struct FieldConfiguration {
  LaserSpec laser12 = shifted_beam({1, 2}, 0.0);
  LaserSpec laser23 = shifted_beam({2, 3}, -0.5);
  LaserSpec laser13 = shifted_beam({1, 3}, 0.5);
  DipoleModel dipole = DipoleModel::z_aligned();

  LoopOmegas omegas(Enantiomer who, const Position& r) const {
    return {rotationless_rabi(laser12, dipole, who, r),
            rotationless_rabi(laser23, dipole, who, r),
            rotationless_rabi(laser13, dipole, who, r)};
  }
};

/// Rectangular grid, uniform along each axis. ny = 1 gives the 1D x-axis.
struct Grid {
  double x0 = -2.0;
  double hx = 0.02;
  int nx = 201;
  double y0 = 0.0;
  double hy = 0.0;
  int ny = 1;

  static Grid line(double xmin, double xmax, int n) {
    if (n < 3 || !(xmax > xmin))
      throw Error(ErrorCode::InvalidArgument, "Grid: need n >= 3 and xmax > xmin");
    return {xmin, (xmax - xmin) / (n - 1), n, 0.0, 0.0, 1};
  }

  static Grid plane(double xmin, double xmax, int nx, double ymin, double ymax, int ny) {
    Grid g = line(xmin, xmax, nx);
    if (ny < 3 || !(ymax > ymin))
      throw Error(ErrorCode::InvalidArgument, "Grid: need ny >= 3 and ymax > ymin");
    g.y0 = ymin;
    g.hy = (ymax - ymin) / (ny - 1);
    g.ny = ny;
    return g;
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix);
  }
  Position at(int ix, int iy) const { return {x0 + hx * ix, y0 + hy * iy}; }
  bool two_dimensional() const { return ny > 1; }
};

/// Diagonal trap potential per level (GHz) as a function of position.
using Trap = std::function<Eigen::Vector3d(const Position&)>;

inline Trap uniform_trap(double v0) {
  return [v0](const Position&) { return Eigen::Vector3d::Constant(v0); };
}

struct DressedFrame {
  Grid grid;
  std::vector<Matrix3c> hamiltonian;
  std::vector<Eigen::Vector3d> eigenvalues;
  std::vector<Matrix3c> eigenvectors;
  std::vector<char> degenerate;
  std::array<int, 3> reference{0, 0, 0};  // component held real positive per branch
};

/// Dressed states on the grid in a smooth gauge: for branch n the component
/// whose smallest magnitude over the grid is largest is held real positive at
/// every point.
inline DressedFrame build_frame(const Grid& g,
                                const std::function<LoopOmegas(const Position&)>& omegas) {
  DressedFrame fr;
  fr.grid = g;
  const std::size_t np = g.size();
  fr.hamiltonian.resize(np);
  fr.eigenvalues.resize(np);
  fr.eigenvectors.resize(np);
  fr.degenerate.resize(np);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t p = g.index(ix, iy);
      const LoopOmegas w = omegas(g.at(ix, iy));
      const Dressing d = dress(w);
      fr.hamiltonian[p] = loop_matrix(w);
      fr.eigenvalues[p] = d.eigenvalues;
      fr.eigenvectors[p] = d.eigenvectors;
      fr.degenerate[p] = d.degenerate;
    }
  for (int n = 0; n < 3; ++n) {
    std::array<double, 3> floor{std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity()};
    for (std::size_t p = 0; p < np; ++p) {
      if (fr.degenerate[p]) continue;
      for (int c = 0; c < 3; ++c)
        floor[static_cast<std::size_t>(c)] =
            std::min(floor[static_cast<std::size_t>(c)], std::abs(fr.eigenvectors[p](c, n)));
    }
    const int c = static_cast<int>(std::max_element(floor.begin(), floor.end()) - floor.begin());
    fr.reference[static_cast<std::size_t>(n)] = c;
    for (std::size_t p = 0; p < np; ++p) {
      const cplx z = fr.eigenvectors[p](c, n);
      if (z == 0.0) continue;
      fr.eigenvectors[p].col(n) *= std::conj(z) / std::abs(z);
      fr.eigenvectors[p](c, n) = std::abs(z);
    }
  }
  return fr;
}

inline DressedFrame build_frame(const FieldConfiguration& f, Enantiomer who, const Grid& g) {
  return build_frame(g, [&](const Position& r) { return f.omegas(who, r); });
}

/// V_n = eps_n + <chi_n| trap |chi_n> at every grid point.
inline std::vector<double> scalar_potential(const DressedFrame& fr, int n,
                                            const std::optional<Trap>& trap = std::nullopt) {
  if (n < 0 || n > 2) throw Error(ErrorCode::InvalidArgument, "scalar_potential: branch 0..2");
  std::vector<double> v(fr.grid.size());
  for (int iy = 0; iy < fr.grid.ny; ++iy)
    for (int ix = 0; ix < fr.grid.nx; ++ix) {
      const std::size_t p = fr.grid.index(ix, iy);
      double value = fr.eigenvalues[p][n];
      if (trap) {
        const Eigen::Vector3d t = (*trap)(fr.grid.at(ix, iy));
        value += (fr.eigenvectors[p].col(n).cwiseAbs2().array() * t.array()).sum();
      }
      v[p] = value;
    }
  return v;
}

namespace detail {

// <chi_n(p)| d chi_m / d axis> with central differences and second-order
// one-sided stencils at the ends of the axis.
inline cplx connection(const DressedFrame& fr, int n, int m, int ix, int iy, bool along_y) {
  const Grid& g = fr.grid;
  const int count = along_y ? g.ny : g.nx;
  const int i = along_y ? iy : ix;
  const double h = along_y ? g.hy : g.hx;
  auto chi = [&](int k) -> Vector3c {
    const std::size_t p = along_y ? g.index(ix, k) : g.index(k, iy);
    return fr.eigenvectors[p].col(m);
  };
  Vector3c d;
  if (i == 0)
    d = (-3.0 * chi(0) + 4.0 * chi(1) - chi(2)) / (2.0 * h);
  else if (i == count - 1)
    d = (3.0 * chi(i) - 4.0 * chi(i - 1) + chi(i - 2)) / (2.0 * h);
  else
    d = (chi(i + 1) - chi(i - 1)) / (2.0 * h);
  return fr.eigenvectors[g.index(ix, iy)].col(n).dot(d);
}

inline void check_continuity(const DressedFrame& fr, int n) {
  const Grid& g = fr.grid;
  auto overlap = [&](std::size_t a, std::size_t b) {
    return std::abs(fr.eigenvectors[a].col(n).dot(fr.eigenvectors[b].col(n)));
  };
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t p = g.index(ix, iy);
      if (ix + 1 < g.nx && overlap(p, g.index(ix + 1, iy)) < 0.9)
        throw Error(ErrorCode::DiscontinuousFrame,
                    "branch " + std::to_string(n + 1) + ": adjacent overlap below 0.9 near x = " +
                        std::to_string(g.at(ix, iy).x));
      if (iy + 1 < g.ny && overlap(p, g.index(ix, iy + 1)) < 0.9)
        throw Error(ErrorCode::DiscontinuousFrame,
                    "branch " + std::to_string(n + 1) + ": adjacent overlap below 0.9 near y = " +
                        std::to_string(g.at(ix, iy).y));
    }
}

}  // namespace detail

/// Berry connection A_n = i <chi_n|grad chi_n> (hbar = 1, inverse grid length
/// units); y component is zero on a 1D grid.
struct VectorField {
  std::vector<double> ax;
  std::vector<double> ay;
};

inline VectorField vector_potential(const DressedFrame& fr, int n) {
  if (n < 0 || n > 2) throw Error(ErrorCode::InvalidArgument, "vector_potential: branch 0..2");
  detail::check_continuity(fr, n);
  const Grid& g = fr.grid;
  VectorField a{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)};
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t p = g.index(ix, iy);
      // i<chi|d chi> is real up to discretisation; keep the real part.
      a.ax[p] = -detail::connection(fr, n, n, ix, iy, false).imag();
      if (g.two_dimensional()) a.ay[p] = -detail::connection(fr, n, n, ix, iy, true).imag();
    }
  return a;
}

struct OffDiagonalReport {
  double max_ratio = 0.0;
  std::size_t argmax_point = 0;
  int argmax_n = 0;
  int argmax_m = 0;
  std::vector<char> masked;  // degenerate points left out of the maximum
  std::size_t masked_count = 0;
};

/// max over points and branch pairs of |v <chi_n|grad chi_m>| / (2 pi |eps_n - eps_m|),
/// with v in grid lengths per ns and eps in GHz, so the ratio compares the
/// non-adiabatic coupling rate with the dressed splitting.
inline OffDiagonalReport offdiagonal_check(const DressedFrame& fr, double typical_speed = 1.0) {
  const Grid& g = fr.grid;
  OffDiagonalReport rep;
  rep.masked.assign(g.size(), 0);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t p = g.index(ix, iy);
      if (fr.degenerate[p]) {
        rep.masked[p] = 1;
        ++rep.masked_count;
        continue;
      }
      for (int n = 0; n < 3; ++n)
        for (int m = 0; m < 3; ++m) {
          if (n == m) continue;
          const double gap = std::abs(fr.eigenvalues[p][n] - fr.eigenvalues[p][m]);
          double conn = std::abs(detail::connection(fr, n, m, ix, iy, false));
          if (g.two_dimensional())
            conn = std::hypot(conn, std::abs(detail::connection(fr, n, m, ix, iy, true)));
          const double ratio = typical_speed * conn / (2.0 * std::numbers::pi * gap);
          if (ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.argmax_point = p;
            rep.argmax_n = n;
            rep.argmax_m = m;
          }
        }
    }
  return rep;
}

/// Largest ||H chi_n - eps_n chi_n|| / ||H|| over the grid.
inline double eigen_residual(const DressedFrame& fr) {
  double worst = 0.0;
  for (std::size_t p = 0; p < fr.grid.size(); ++p) {
    const double norm = fr.hamiltonian[p].norm();
    if (norm == 0.0) continue;
    for (int n = 0; n < 3; ++n) {
      const Vector3c r = fr.hamiltonian[p] * fr.eigenvectors[p].col(n) -
                         fr.eigenvalues[p][n] * fr.eigenvectors[p].col(n);
      worst = std::max(worst, r.norm() / norm);
    }
  }
  return worst;
}

}  // namespace chiralrot::dressed
