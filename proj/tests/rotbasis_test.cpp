#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "chiralrot/rotbasis.hpp"

namespace {

using namespace chiralrot;

const RotorConstants kD2S2{76.15, 6.401, 6.399};

TEST(RotEnergy, Examples) {
  EXPECT_EQ(rot_energy({0, 0, 0}, kD2S2), 0.0);
  EXPECT_NEAR(rot_energy({1, 0, 0}, kD2S2), 12.798, 1e-12);
  EXPECT_NEAR(rot_energy({1, 1, 1}, kD2S2), 82.549, 1e-12);
}

TEST(RotEnergy, IndependentOfM) {
  for (int J = 0; J <= 8; ++J)
    for (int K = -J; K <= J; ++K)
      for (int M = -J; M <= J; ++M)
        EXPECT_EQ(rot_energy({J, K, M}, kD2S2), rot_energy({J, K, 0}, kD2S2));
}

TEST(Kappa, Examples) {
  EXPECT_NEAR(asymmetry_kappa(kD2S2), -0.99994, 1e-5);
  EXPECT_NEAR(asymmetry_kappa({3, 2, 1}), 0.0, 1e-15);
  EXPECT_NEAR(asymmetry_kappa({5, 5, 1}), 1.0, 1e-15);
}

TEST(Kappa, DegenerateRotorThrows) {
  try {
    asymmetry_kappa({2, 2, 2});
    FAIL() << "expected DegenerateRotor";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateRotor);
  }
}

TEST(EnumerateBasis, SizesAndOrdering) {
  EXPECT_EQ(enumerate_basis({0}).size(), 1u);
  EXPECT_EQ(enumerate_basis({1}).size(), 10u);
  EXPECT_EQ(enumerate_basis({2}).size(), 35u);
  for (int j = 0; j <= 10; ++j) {
    const auto basis = enumerate_basis({j});
    EXPECT_EQ(basis.size(), BasisTruncation{j}.size());
    for (std::size_t i = 1; i < basis.size(); ++i) EXPECT_LT(basis[i - 1], basis[i]);
    EXPECT_EQ(basis, enumerate_basis({j}));
  }
  EXPECT_EQ(enumerate_basis({0}).front(), (RotState{0, 0, 0}));
  EXPECT_THROW(enumerate_basis({-1}), Error);
}

TEST(Thermal, ZeroTemperatureIsGroundState) {
  const auto th = thermal_rot_state(0.0, kD2S2, {3});
  EXPECT_EQ(th.probabilities[0], 1.0);
  for (std::size_t i = 1; i < th.probabilities.size(); ++i)
    EXPECT_EQ(th.probabilities[i], 0.0);
}

TEST(Thermal, OneMilliKelvinIsGroundState) {
  const auto th = thermal_rot_state(1e-3, kD2S2, {3});
  EXPECT_GT(th.probabilities[0], 1.0 - 1e-9);
}

TEST(Thermal, HalfKelvinMatchesBoltzmannSum) {
  // Oracle: Boltzmann sum over (J, K) with explicit (2J+1) M-degeneracy.
  const double kt = 20.83661912 * 0.5;
  std::map<std::pair<int, int>, double> weight;
  double z = 0.0;
  for (int J = 0; J <= 6; ++J)
    for (int K = -J; K <= J; ++K) {
      const double e = 6.399 * J * (J + 1) + (76.15 - 6.399) * K * K;
      const double w = std::exp(-e / kt);
      weight[{J, K}] = w;
      z += (2 * J + 1) * w;
    }
  const auto th = thermal_rot_state(0.5, kD2S2, {6});
  double total = 0.0;
  for (std::size_t i = 0; i < th.states.size(); ++i) {
    const auto& s = th.states[i];
    EXPECT_NEAR(th.probabilities[i], (weight[{s.J, s.K}] / z), 1e-14 * th.probabilities[i] + 1e-300);
    total += th.probabilities[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Thermal, MonotoneInEnergyAndNormalised) {
  for (double T : {0.01, 0.1, 0.5, 1.0}) {
    const auto th = thermal_rot_state(T, kD2S2, {10});
    double total = 0.0;
    for (double p : th.probabilities) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t i = 0; i < th.states.size(); ++i)
      for (std::size_t j = 0; j < th.states.size(); ++j)
        if (rot_energy(th.states[i], kD2S2) < rot_energy(th.states[j], kD2S2)) {
          ASSERT_GE(th.probabilities[i], th.probabilities[j]);
        }
  }
}

TEST(Thermal, TruncationCheck) {
  try {
    thermal_rot_state(0.5, kD2S2, {2});
    FAIL() << "expected TruncationInsufficient";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncationInsufficient);
  }
  // The documented defaults are sufficient.
  EXPECT_NO_THROW(thermal_rot_state(0.5, kD2S2, {8}));
  EXPECT_NO_THROW(thermal_rot_state(1e-3, kD2S2, {3}));
  EXPECT_THROW(thermal_rot_state(-1.0, kD2S2, {3}), Error);
}

}  // namespace
