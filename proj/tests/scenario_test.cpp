#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "chiralrot/scenario.hpp"

namespace {

using namespace chiralrot;
using scenario::ConfigError;
using scenario::ScenarioConfig;

const std::string kMinimal = R"(chiralrot-scenario v1
[laser12]
polarization = x
[laser23]
polarization = x
[laser13]
polarization = z
[run]
jmax = 2
samples = 50
)";

ScenarioConfig with_run(const std::string& extra) { return scenario::parse_config(kMinimal + extra); }

void expect_config_error(const std::string& text, const std::string& field, int line) {
  try {
    scenario::parse_config(text);
    ADD_FAILURE() << "no error for field " << field;
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigValidation);
    EXPECT_EQ(e.field(), field) << e.what();
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

TEST(Config, MinimalDefaults) {
  const auto c = scenario::parse_config(kMinimal);
  EXPECT_EQ(c.truncation.jmax, 2);
  EXPECT_EQ(c.samples, 50);
  EXPECT_EQ(c.lasers[2].polarization, Polarization::Z);
  EXPECT_DOUBLE_EQ(c.lasers[0].peak_ghz, units::rabi_scale_ghz());
  EXPECT_EQ(c.preparation, Preparation::PartiallyDressed);
  EXPECT_FALSE(c.only.has_value());
}

TEST(Config, ParsesAllSections) {
  const auto c = scenario::parse_config(R"(chiralrot-scenario v1
# comment line
[molecule]
A = 80
B = 7   # trailing comment
C = 6.5
vib_energies = 0 100 210
[dipole]
mu12 = 0.5
mu23 = 0 1 0.25i
mu13 = 0.1-0.2i 0.9 0
flip23 = false
flip13 = false
[laser12]
polarization = sigma+
peak_q = 4000
[laser23]
polarization = custom
field = 0.6 0 0.8i
peak_ghz = 0.5
waist = 2
[laser13]
polarization = y
center_x = 0.25
center_y = -0.1
phase_gradient_x = 0.3
frequency_ghz = 210
[run]
name = probe
temperature_k = 0.1
preparation = diabatic
tuning = loop
loop_anchor = 1 -1
jmax = 4
t_end = 10
samples = 100
average_window = snapped
position = 0.1 0.2
enantiomer = L
seed = 17
[grid]
x_min = -1
x_max = 1
nx = 11
ny = 5
[output]
traces = t.csv
[timescales]
tau_exp_us = 5 20
tau_lr_ms = 12
)");
  EXPECT_EQ(c.name, "probe");
  EXPECT_DOUBLE_EQ(c.constants.A, 80);
  EXPECT_DOUBLE_EQ(c.vib.energy[2], 210);
  EXPECT_EQ(c.dipole.at({1, 2}).components[1], cplx(0.5));
  EXPECT_EQ(c.dipole.at({2, 3}).components[2], cplx(0, 0.25));
  EXPECT_EQ(c.dipole.at({1, 3}).components[0], cplx(0.1, -0.2));
  EXPECT_TRUE(c.dipole.at({1, 2}).chiral_flip);
  EXPECT_FALSE(c.dipole.at({2, 3}).chiral_flip);
  EXPECT_EQ(c.lasers[0].polarization, Polarization::SigmaPlus);
  EXPECT_DOUBLE_EQ(c.lasers[0].peak_ghz, units::rabi_scale_ghz(4000));
  EXPECT_EQ(c.lasers[1].polarization, Polarization::Custom);
  EXPECT_EQ(c.lasers[1].field[2], cplx(0, 0.8));
  EXPECT_DOUBLE_EQ(c.lasers[1].beam.waist, 2);
  EXPECT_DOUBLE_EQ(c.lasers[2].beam.center_y, -0.1);
  EXPECT_DOUBLE_EQ(*c.lasers[2].frequency_ghz, 210);
  EXPECT_EQ(c.preparation, Preparation::Diabatic);
  EXPECT_EQ(c.tuning.mode, Tuning::Loop);
  EXPECT_EQ(c.tuning.anchor_K, -1);
  EXPECT_EQ(c.window, scenario::Window::Snapped);
  EXPECT_DOUBLE_EQ(c.position.y, 0.2);
  EXPECT_EQ(c.only, Enantiomer::L);
  EXPECT_EQ(c.seed, 17u);
  EXPECT_TRUE(c.grid.two_dimensional());
  EXPECT_EQ(c.grid.ny, 5);
  EXPECT_EQ(c.outputs.at("traces"), "t.csv");
  EXPECT_EQ(c.outputs.at("summary"), "summary.txt");
  EXPECT_DOUBLE_EQ(c.tau_exp_us_min, 5);
  EXPECT_DOUBLE_EQ(c.tau_lr_ms, 12);
}

TEST(Config, FieldLevelErrors) {
  expect_config_error("chiralrot-scenario v2\n", "header", 1);
  expect_config_error(kMinimal + "[bogus]\n", "bogus", 11);
  expect_config_error(kMinimal + "temperature = 3\n", "run.temperature", 11);
  expect_config_error(kMinimal + "jmax = 3\n", "run.jmax", 11);
  expect_config_error(kMinimal + "t_end = fast\n", "run.t_end", 11);
  expect_config_error(kMinimal + "t_end = -1\n", "run.t_end", 11);
  expect_config_error(kMinimal + "preparation = sudden\n", "run.preparation", 11);
  expect_config_error(kMinimal + "enantiomer = both sides\n", "run.enantiomer", 11);
  expect_config_error(kMinimal + "just words\n", "run", 11);
  expect_config_error(kMinimal + "tuning = loop\nloop_anchor = 1 2\n", "run.loop_anchor", 12);
  expect_config_error(kMinimal + "tuning = loop\nloop_anchor = 2 0\n", "run.loop_anchor", 12);
  expect_config_error(kMinimal + "restricted_loop = true\nrestricted_states = 1:1:1:1 2:1:1:0 3:1:1:1\n",
                      "run.preparation", 0);
  expect_config_error(kMinimal + "restricted_loop = true\npreparation = adiabatic\nrestricted_states = 1:1:1:1 2:1:1:0\n",
                      "run.restricted_states", 13);
  expect_config_error(kMinimal + "restricted_states = 1:1:1\n", "run.restricted_states", 11);
  expect_config_error(kMinimal + "tuning = absolute\n", "laser12.frequency_ghz", 0);
  expect_config_error("chiralrot-scenario v1\n[laser12]\n[laser23]\n", "laser13", 0);
  expect_config_error("chiralrot-scenario v1\n[laser12]\npolarization = w\n[laser23]\n[laser13]\n",
                      "laser12.polarization", 3);
  expect_config_error("chiralrot-scenario v1\n[laser12]\npolarization = custom\n[laser23]\n[laser13]\n",
                      "laser12.polarization", 3);
  expect_config_error("chiralrot-scenario v1\n[laser12]\npolarization = custom\nfield = 1 1 0\n[laser23]\n[laser13]\n",
                      "laser12.field", 4);
  expect_config_error("chiralrot-scenario v1\n[laser12]\npeak_q = 10\npeak_ghz = 1\n[laser23]\n[laser13]\n",
                      "laser12.peak_ghz", 4);
  expect_config_error("chiralrot-scenario v1\n[laser12]\nwaist = 0\n[laser23]\n[laser13]\n", "laser12.waist", 3);
  expect_config_error("chiralrot-scenario v1\n[molecule]\nB = 90\n[laser12]\n[laser23]\n[laser13]\n", "molecule.A", 0);
  expect_config_error("chiralrot-scenario v1\n[dipole]\nmu12 = 0\n[laser12]\n[laser23]\n[laser13]\n", "dipole.mu12", 3);
  expect_config_error("chiralrot-scenario v1\n[laser12]\n[laser12]\n", "laser12", 3);
  expect_config_error("chiralrot-scenario v1\nA = 1\n", "A", 2);
  expect_config_error(kMinimal + "samples = 1\n", "run.samples", 11);
  expect_config_error(kMinimal + "[output]\ntraces = ../x.csv\n", "output.traces", 12);
}

TEST(Config, BuiltinsValidateAndMatchShippedFiles) {
  const char* src = std::getenv("CHIRALROT_SOURCE_DIR");
  for (const auto& b : scenario::builtins()) {
    const auto c = scenario::builtin(b.name);
    EXPECT_EQ(c.name, b.name);
    EXPECT_NO_THROW(scenario::validate(c));
    if (!src) continue;
    std::ifstream in(std::string(src) + "/configs/" + std::string(b.name) + ".cfg");
    ASSERT_TRUE(in.good()) << b.name;
    std::ostringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), b.text) << b.name;
  }
  EXPECT_THROW(scenario::builtin("fig9"), ConfigError);
}

TEST(Config, BuiltinSetups) {
  const auto g = scenario::builtin("fig5-T0.5K-xxz-groundres");
  EXPECT_EQ(g.lasers[0].polarization, Polarization::X);
  EXPECT_EQ(g.lasers[1].polarization, Polarization::X);
  EXPECT_EQ(g.lasers[2].polarization, Polarization::Z);
  EXPECT_DOUBLE_EQ(g.temperature_k, 0.5);
  EXPECT_EQ(g.tuning.mode, Tuning::Ground);
  const auto l = scenario::builtin("fig5-T0.5K-xxz-loopres");
  EXPECT_EQ(l.tuning.mode, Tuning::Loop);
  EXPECT_DOUBLE_EQ(scenario::builtin("fig7-1mK-xxz").temperature_k, 1e-3);
  EXPECT_TRUE(scenario::builtin("restricted-loop").restricted_loop);
}

TEST(Timescales, ReferenceConstants) {
  const auto r = scenario::timescale_report(scenario::builtin("fig7-1mK-xxz"));
  EXPECT_NEAR(r.inv_a_ns, 0.013, 0.0005);
  EXPECT_NEAR(r.inv_b_ns, 0.156, 0.0005);
  EXPECT_NEAR(r.tau_omega_ns, 4.8, 0.01);
  EXPECT_NEAR(r.omega12_ghz, 0.2081, 0.0005);
  EXPECT_TRUE(r.delta_faster_than_omega);
  EXPECT_TRUE(r.separated);
  EXPECT_DOUBLE_EQ(r.tau_exp_us_min, 10);
  EXPECT_DOUBLE_EQ(r.tau_exp_us_max, 40);
  EXPECT_DOUBLE_EQ(r.tau_lr_ms, 33);
  EXPECT_EQ(r.basis_size, 3u * 84u);
  EXPECT_GT(r.max_detuning_ghz, 0.0);
}

TEST(Timescales, OmegaScaling) {
  auto c = scenario::builtin("fig7-1mK-xxz");
  const double base = scenario::timescale_report(c).tau_omega_ns;
  for (auto& l : c.lasers) l.peak_ghz *= 10;
  EXPECT_NEAR(scenario::timescale_report(c).tau_omega_ns, base / 10, 1e-12 * base);
  // A Rabi frequency faster than the rotations is flagged.
  for (auto& l : c.lasers) l.peak_ghz *= 100;
  EXPECT_FALSE(scenario::timescale_report(c).delta_faster_than_omega);
}

TEST(Run, RestrictedLoopIsConstantAndMatchesDressedValues) {
  const auto r = scenario::run_scenario(scenario::builtin("restricted-loop"));
  ASSERT_EQ(r.labels.size(), 3u);
  for (std::size_t n = 0; n < 3; ++n) {
    for (double v : r.right[n].values) EXPECT_NEAR(v, r.expected[n], 1e-8);
    for (double v : r.left[n].values) EXPECT_NEAR(v, r.expected_left[n], 1e-8);
    EXPECT_GE(std::abs(r.expected[n]), 0.1);
    EXPECT_LE(std::abs(r.expected[n]), 1.0);
  }
}

TEST(Run, MilliKelvinHasNoLoopThroughGround) {
  auto c = scenario::builtin("fig7-1mK-xxz");
  c.samples = 200;
  const auto r = scenario::run_scenario(c);
  EXPECT_EQ(r.census.through_initial, 0u);
  EXPECT_GT(r.census.total, 0u);
  EXPECT_EQ(r.isospectral_status, "ok");
  EXPECT_EQ(r.members, 1u);
  double diff = 0.0;
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_LT(std::abs(r.left[n].time_average), 0.1);
    EXPECT_LT(std::abs(r.right[n].time_average), 0.1);
    diff = std::max(diff, scenario::max_abs_difference(r.left[n], r.right[n]));
  }
  EXPECT_GT(diff, 1e-3);
}

TEST(Run, ThermalScenarioHasLoopsThroughPopulatedStates) {
  auto c = scenario::builtin("fig5-T0.5K-xxz-groundres");
  c.truncation.jmax = 7;
  c.samples = 20;
  const auto r = scenario::run_scenario(c);
  EXPECT_GT(r.census.through_initial, 0u);
  EXPECT_GT(r.members, 50u);
}

TEST(Run, TruncationTooSmallForTemperature) {
  auto c = scenario::builtin("fig5-T0.5K-xxz-groundres");
  c.truncation.jmax = 3;
  try {
    scenario::run_scenario(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncationInsufficient);
    EXPECT_EQ(e.field(), "run.jmax");
  }
}

TEST(Run, DiabaticIsChiralityBlind) {
  auto c = with_run("preparation = diabatic\ntemperature_k = 0.1\n");
  c.truncation.jmax = 4;
  const auto r = scenario::run_scenario(c);
  ASSERT_EQ(r.labels, std::vector<std::string>{"thermal"});
  EXPECT_LT(scenario::max_abs_difference(r.left[0], r.right[0]), 1e-9);
}

TEST(Run, DeterministicOutputs) {
  auto c = scenario::builtin("fig7-1mK-xxz");
  c.samples = 300;
  const auto a = scenario::run_scenario(c), b = scenario::run_scenario(c);
  EXPECT_EQ(scenario::traces_csv(a), scenario::traces_csv(b));
  EXPECT_EQ(scenario::summary_text(a), scenario::summary_text(b));
  EXPECT_EQ(scenario::loops_csv(a.hl, a.census), scenario::loops_csv(b.hl, b.census));
}

TEST(Run, TracesCsvLayout) {
  auto c = with_run("enantiomer = R\n");
  const auto r = scenario::run_scenario(c);
  const auto csv = scenario::traces_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "time_ns,time_in_inverse_Omega12,value_R_branch1,value_R_branch2,value_R_branch3");
  EXPECT_EQ(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')), 51);
  EXPECT_TRUE(r.left.empty());
  const auto s = scenario::summary_text(r);
  EXPECT_NE(s.find("time_average_R_branch1 = "), std::string::npos);
  EXPECT_EQ(s.find("time_average_L_branch1"), std::string::npos);
  // Last sample sits at t_end = 40 / Omega_12^max.
  EXPECT_NEAR(r.times.back() * r.omega_unit, 40.0, 1e-12);
}

TEST(Run, SnappedWindow) {
  const auto r = scenario::run_scenario(with_run("average_window = snapped\n"));
  EXPECT_LE(r.right[0].window, r.times.back());
  EXPECT_GT(r.right[0].window, 0.9 * r.times.back());
}

TEST(Output, DressedCsv) {
  auto c = with_run("[grid]\nx_min = -1\nx_max = 1\nnx = 21\n");
  const auto csv = scenario::dressed_csv(c, Enantiomer::L);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,V1,V2,V3,Ax1,Ax2,Ax3,Ay1,Ay2,Ay3");
  EXPECT_EQ(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')), 22);
}

TEST(Output, LoopsCsv) {
  auto c = with_run("");
  const auto r = scenario::run_scenario(c);
  const auto csv = scenario::loops_csv(r.hl, r.census);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "cycle,level_1,level_2,level_3,same_labels");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.census.total + 1);
}

}  // namespace
