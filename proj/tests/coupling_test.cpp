#include <cmath>
#include <complex>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "chiralrot/coupling.hpp"

namespace {

using namespace chiralrot;

std::vector<LevelIndex> two_level_basis(int jmax) {
  std::vector<LevelIndex> out;
  for (int v : {1, 2})
    for (const auto& r : enumerate_basis({jmax})) out.push_back({v, r});
  return out;
}

TEST(Helicity, PinnedTriples) {
  const double r = std::sqrt(2.0) / 2.0;
  const auto x = helicity_components(Polarization::X);
  EXPECT_EQ(x[0], cplx(r, 0));
  EXPECT_EQ(x[1], cplx(0, 0));
  EXPECT_EQ(x[2], cplx(-r, 0));
  const auto y = helicity_components(Polarization::Y);
  EXPECT_EQ(y[0], cplx(0, r));
  EXPECT_EQ(y[2], cplx(0, r));
  EXPECT_EQ(helicity_components(Polarization::Z)[1], cplx(1, 0));
  EXPECT_EQ(helicity_components(Polarization::SigmaPlus)[2], cplx(1, 0));
  EXPECT_EQ(helicity_components(Polarization::SigmaMinus)[0], cplx(1, 0));
}

TEST(Helicity, MatchesCartesianUnitVectors) {
  // E^S_sigma = (-1)^sigma E_{-sigma} with E_{+-1} = -+(Ex +- i Ey)/sqrt2.
  auto from_cartesian = [](cplx ex, cplx ey, cplx ez) {
    const double r = 1.0 / std::sqrt(2.0);
    const cplx i(0, 1);
    const cplx e_plus = -(ex + i * ey) * r;
    const cplx e_minus = (ex - i * ey) * r;
    return SphericalTriple{-e_plus, ez, -e_minus};
  };
  const auto cmp = [](const SphericalTriple& a, const SphericalTriple& b) {
    for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(a[k] - b[k]), 1e-15) << k;
  };
  cmp(helicity_components(Polarization::X), from_cartesian(1, 0, 0));
  cmp(helicity_components(Polarization::Y), from_cartesian(0, 1, 0));
  cmp(helicity_components(Polarization::Z), from_cartesian(0, 0, 1));
}

TEST(Rabi, GroundToFirstExcitedZZ) {
  const auto laser = LaserSpec::with_polarization(Polarization::Z, {1, 2}, 0.7);
  const auto dip = DipoleModel::z_aligned(1.3);
  const cplx om = rabi_frequency({2, {1, 0, 0}}, {1, {0, 0, 0}}, laser, dip, Enantiomer::R, {});
  EXPECT_NEAR(om.real(), 0.7 * 1.3 / std::sqrt(3.0), 1e-15);
  EXPECT_EQ(om.imag(), 0.0);
}

TEST(Rabi, SameRotationalStateFromGroundVanishes) {
  const auto dip = DipoleModel::z_aligned();
  for (auto p : {Polarization::X, Polarization::Y, Polarization::Z, Polarization::SigmaPlus,
                 Polarization::SigmaMinus}) {
    const auto laser = LaserSpec::with_polarization(p, {1, 2});
    for (auto who : {Enantiomer::L, Enantiomer::R})
      EXPECT_EQ(rabi_frequency({2, {0, 0, 0}}, {1, {0, 0, 0}}, laser, dip, who, {}), 0.0);
  }
}

TEST(Rabi, EnantiomersDifferBySign) {
  auto dip = DipoleModel::z_aligned();
  dip.transitions[{1, 2}].components = {cplx(0.2, 0.1), cplx(0.9, -0.3), cplx(-0.4, 0.5)};
  const auto basis = two_level_basis(2);
  auto laser = LaserSpec::with_polarization(Polarization::X, {1, 2});
  laser.field = {cplx(0.3, 0.2), cplx(0.5, -0.1), cplx(-0.6, 0.4)};
  const Position r{0.3, -0.2};
  int nonzero = 0;
  for (const auto& f : basis)
    for (const auto& i : basis) {
      if (f.vib != 2 || i.vib != 1) continue;
      const cplx l = rabi_frequency(f, i, laser, dip, Enantiomer::L, r);
      const cplx rr = rabi_frequency(f, i, laser, dip, Enantiomer::R, r);
      EXPECT_EQ(l, -rr);
      if (l != 0.0) ++nonzero;
    }
  EXPECT_GT(nonzero, 20);

  dip.transitions[{1, 2}].chiral_flip = false;
  EXPECT_EQ(rabi_frequency({2, {1, 0, 0}}, {1, {0, 0, 0}}, laser, dip, Enantiomer::L, r),
            rabi_frequency({2, {1, 0, 0}}, {1, {0, 0, 0}}, laser, dip, Enantiomer::R, r));
}

TEST(Rabi, UnknownTransition) {
  DipoleModel dip;
  dip.transitions[{1, 2}] = {};
  const auto laser = LaserSpec::with_polarization(Polarization::Z, {2, 3});
  try {
    rabi_frequency({3, {1, 0, 0}}, {2, {0, 0, 0}}, laser, dip, Enantiomer::R, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownTransition);
  }
}

TEST(Rabi, SpatialScalingFollowsEnvelope) {
  auto laser = LaserSpec::with_polarization(Polarization::X, {1, 2});
  laser.beam = {0.4, -0.1, 0.8, 1.5, -0.5};
  const auto dip = DipoleModel::z_aligned();
  const Position centre{0.4, -0.1};
  const auto basis = two_level_basis(2);
  for (const Position r : {Position{0.0, 0.0}, Position{1.0, 0.3}, Position{-0.7, 0.9}}) {
    const cplx expected = laser.beam.envelope(r) / laser.beam.envelope(centre);
    for (const auto& t : allowed_transitions(laser, dip, basis)) {
      const cplx c = rabi_frequency(t.final_level, t.initial_level, laser, dip, Enantiomer::R, centre);
      const cplx v = rabi_frequency(t.final_level, t.initial_level, laser, dip, Enantiomer::R, r);
      EXPECT_LT(std::abs(v / c - expected), 1e-13);
    }
  }
}

TEST(Rabi, HermitianPairing) {
  // <i| (mu.E)^dagger |f> built directly from the conjugated field and dipole
  // must equal conj(<f| mu.E |i>).
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  SphericalTriple field, mu;
  for (auto& c : field) c = {g(rng), g(rng)};
  for (auto& c : mu) c = {g(rng), g(rng)};
  for (int Ji = 0; Ji <= 3; ++Ji)
    for (const auto& i : enumerate_basis({3}))
      for (const auto& f : enumerate_basis({3})) {
        if (i.J != Ji) continue;
        const cplx forward = orientation_factor(f, i, field, mu);
        cplx reverse = 0.0;
        for (int s = -1; s <= 1; ++s)
          for (int sp = -1; sp <= 1; ++sp) {
            // (D^1*_{s s'})^dagger = D^1_{s s'} = (-1)^(s - s') D^1*_{-s -s'}
            const double sign = ((s - sp) % 2 == 0) ? 1.0 : -1.0;
            reverse += std::conj(mu[sp + 1] * field[s + 1]) * sign *
                       wigner::rot_integral(i, f, -s, -sp);
          }
        EXPECT_LT(std::abs(reverse - std::conj(forward)), 1e-13);
      }
}

TEST(Allowed, ZLaserFromGround) {
  const auto laser = LaserSpec::with_polarization(Polarization::Z, {1, 2});
  std::set<RotState> reached;
  for (const auto& t : allowed_transitions(laser, DipoleModel::z_aligned(), two_level_basis(1)))
    if (t.initial_level == LevelIndex{1, {0, 0, 0}}) reached.insert(t.final_level.rot);
  EXPECT_EQ(reached, (std::set<RotState>{{1, 0, 0}}));
}

TEST(Allowed, XLaserFromGround) {
  const auto laser = LaserSpec::with_polarization(Polarization::X, {1, 2});
  std::set<RotState> reached;
  for (const auto& t : allowed_transitions(laser, DipoleModel::z_aligned(), two_level_basis(2)))
    if (t.initial_level == LevelIndex{1, {0, 0, 0}}) reached.insert(t.final_level.rot);
  EXPECT_EQ(reached, (std::set<RotState>{{1, 0, -1}, {1, 0, 1}}));
}

TEST(Allowed, ZLaserFromOneOneZero) {
  const auto laser = LaserSpec::with_polarization(Polarization::Z, {1, 2});
  std::set<RotState> reached;
  for (const auto& t : allowed_transitions(laser, DipoleModel::z_aligned(), two_level_basis(2)))
    if (t.initial_level == LevelIndex{1, {1, 1, 0}}) reached.insert(t.final_level.rot);
  EXPECT_EQ(reached, (std::set<RotState>{{2, 1, 0}}));
}

TEST(Allowed, MatchesBruteForceScan) {
  std::vector<SphericalTriple> dipoles = {
      {cplx(0), cplx(1), cplx(0)},
      {cplx(0.5, 0.1), cplx(0), cplx(-0.2, 0.3)},
      {cplx(0.3), cplx(0.7, 0.2), cplx(0.1, -0.4)}};
  for (auto p : {Polarization::X, Polarization::Y, Polarization::Z, Polarization::SigmaPlus,
                 Polarization::SigmaMinus})
    for (const auto& mu : dipoles) {
      DipoleModel dip;
      dip.transitions[{1, 2}] = {mu, true};
      auto laser = LaserSpec::with_polarization(p, {1, 2});
      laser.beam.center_x = 0.25;
      const auto basis = two_level_basis(3);
      std::set<Transition> brute;
      for (const auto& i : basis)
        for (const auto& f : basis) {
          if (i.vib != 1 || f.vib != 2) continue;
          if (rabi_frequency(f, i, laser, dip, Enantiomer::R, {0.25, 0.0}) != 0.0)
            brute.insert({f, i});
        }
      const auto listed = allowed_transitions(laser, dip, basis);
      EXPECT_EQ(std::set<Transition>(listed.begin(), listed.end()), brute);
      for (const auto& t : listed) {
        const auto& a = t.initial_level.rot;
        const auto& b = t.final_level.rot;
        EXPECT_LE(std::abs(b.J - a.J), 1);
        EXPECT_NE(laser.field[b.M - a.M + 1], 0.0);
        EXPECT_NE(mu[b.K - a.K + 1], 0.0);
      }
    }
}

TEST(Dipole, RotationlessElement) {
  EXPECT_EQ(DipoleModel::z_aligned(0.8).at({1, 2}).rotationless_element(), cplx(0.8));
  DipoleTransition t{{cplx(0, 0.6), cplx(0), cplx(0, 0.8)}, true};
  EXPECT_LT(std::abs(t.rotationless_element() - cplx(0, 1.0)), 1e-15);
  DipoleModel bad;
  bad.transitions[{1, 2}] = {{cplx(0), cplx(0), cplx(0)}, true};
  EXPECT_THROW(bad.validate(), Error);
}

}  // namespace
