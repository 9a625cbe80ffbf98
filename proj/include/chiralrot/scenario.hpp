#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chiralrot/coupling.hpp"
#include "chiralrot/dressed.hpp"
#include "chiralrot/error.hpp"
#include "chiralrot/hamiltonian.hpp"
#include "chiralrot/looptopology.hpp"
#include "chiralrot/propagate.hpp"
#include "chiralrot/rotbasis.hpp"
#include "chiralrot/units.hpp"

// Scenario configuration, runs and output tables.
namespace chiralrot::scenario {

/// Validation failure tied to a config field ("section.key") and line.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, int line, const std::string& what,
              ErrorCode code = ErrorCode::ConfigValidation)
      : Error(code, what), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

inline constexpr std::string_view kHeader = "chiralrot-scenario v1";

enum class Window { Full, Snapped };

struct LaserConfig {
  Polarization polarization = Polarization::X;
  SphericalTriple field{};  // custom polarisation only
  double peak_ghz = units::rabi_scale_ghz();
  BeamProfile beam;
  std::optional<double> frequency_ghz;  // absolute tuning only
};

struct ScenarioConfig {
  std::string name = "custom";
  RotorConstants constants;
  VibLevels vib;
  DipoleModel dipole = DipoleModel::z_aligned();
  std::array<LaserConfig, 3> lasers;  // 1-2, 2-3, 1-3
  double temperature_k = 0.0;
  Preparation preparation = Preparation::PartiallyDressed;
  TuningSpec tuning;
  BasisTruncation truncation{3};
  double t_end = 40.0;  // units of 1/Omega_12^max
  int samples = 2000;
  Window window = Window::Full;
  Position position;
  bool restricted_loop = false;
  std::vector<LevelIndex> restricted_states;
  std::optional<Enantiomer> only;  // nullopt: both
  std::uint64_t seed = 1;
  dressed::Grid grid = dressed::Grid::line(-2.0, 2.0, 201);
  std::map<std::string, std::string> outputs{{"traces", "traces.csv"},
                                             {"couplings", "couplings"},
                                             {"loops", "loops.csv"},
                                             {"dressed", "dressed"},
                                             {"flips", "flip_table.csv"},
                                             {"summary", "summary.txt"}};
  double tau_exp_us_min = 10.0;
  double tau_exp_us_max = 40.0;
  double tau_lr_ms = 33.0;

  ScenarioConfig() {
    lasers[2].polarization = Polarization::Z;
    lasers[1].beam.center_x = -0.5;
    lasers[2].beam.center_x = 0.5;
  }

  bool wants(Enantiomer e) const { return !only || *only == e; }

  LaserSet laser_set() const {
    const VibPair pairs[3] = {{1, 2}, {2, 3}, {1, 3}};
    LaserSet out;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& c = lasers[k];
      LaserSpec l;
      l.polarization = c.polarization;
      l.field = c.polarization == Polarization::Custom ? c.field : helicity_components(c.polarization);
      l.peak = c.peak_ghz;
      l.beam = c.beam;
      l.drives = pairs[k];
      l.frequency = c.frequency_ghz.value_or(0.0);
      out[k] = l;
    }
    tune(out, tuning, vib, constants);
    return out;
  }

  /// Omega_12^max: rotationless 1-2 Rabi frequency at the 1-2 beam centre.
  double omega_unit() const {
    const LaserSet l = laser_set();
    return std::abs(rotationless_rabi(l[0], dipole, Enantiomer::R, {l[0].beam.center_x, l[0].beam.center_y}));
  }
};

namespace detail {

struct Value {
  std::string text;
  int line = 0;
};

using Section = std::map<std::string, Value>;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"molecule", {"A", "B", "C", "vib_energies"}},
      {"dipole", {"mu12", "mu23", "mu13", "flip12", "flip23", "flip13"}},
      {"laser12", {"polarization", "field", "peak_q", "peak_ghz", "center_x", "center_y", "waist",
                   "phase_gradient_x", "phase_gradient_y", "frequency_ghz"}},
      {"run", {"name", "temperature_k", "preparation", "tuning", "loop_anchor", "jmax", "t_end", "samples",
               "average_window", "position", "restricted_loop", "restricted_states", "enantiomer", "seed"}},
      {"grid", {"x_min", "x_max", "nx", "y_min", "y_max", "ny"}},
      {"output", {"traces", "couplings", "loops", "dressed", "flips", "summary"}},
      {"timescales", {"tau_exp_us", "tau_lr_ms"}},
  };
  return s;
}

class Reader {
 public:
  Reader(std::map<std::string, Section> sections, std::map<std::string, int> header_lines)
      : sections_(std::move(sections)), header_lines_(std::move(header_lines)) {}

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  int section_line(const std::string& s) const {
    auto it = header_lines_.find(s);
    return it == header_lines_.end() ? 0 : it->second;
  }

  const Value* find(const std::string& sec, const std::string& key) const {
    auto s = sections_.find(sec);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  [[noreturn]] void fail(const std::string& sec, const std::string& key, const std::string& msg) const {
    const Value* v = find(sec, key);
    throw ConfigError(sec + "." + key, v ? v->line : section_line(sec), msg);
  }

  std::optional<double> number(const std::string& sec, const std::string& key) const {
    const Value* v = find(sec, key);
    if (!v) return std::nullopt;
    return parse_double(sec, key, v->text);
  }

  std::optional<long long> integer(const std::string& sec, const std::string& key) const {
    const Value* v = find(sec, key);
    if (!v) return std::nullopt;
    long long out = 0;
    const auto& t = v->text;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || p != t.data() + t.size()) fail(sec, key, "expected an integer, got '" + t + "'");
    return out;
  }

  std::optional<bool> boolean(const std::string& sec, const std::string& key) const {
    const Value* v = find(sec, key);
    if (!v) return std::nullopt;
    if (v->text == "true" || v->text == "yes" || v->text == "1") return true;
    if (v->text == "false" || v->text == "no" || v->text == "0") return false;
    fail(sec, key, "expected true or false, got '" + v->text + "'");
  }

  std::optional<std::string> text(const std::string& sec, const std::string& key) const {
    const Value* v = find(sec, key);
    if (!v) return std::nullopt;
    return v->text;
  }

  std::optional<std::vector<double>> numbers(const std::string& sec, const std::string& key,
                                             std::size_t count) const {
    const Value* v = find(sec, key);
    if (!v) return std::nullopt;
    const auto t = tokens(v->text);
    if (t.size() != count) fail(sec, key, "expected " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (const auto& s : t) out.push_back(parse_double(sec, key, s));
    return out;
  }

  /// Complex literal: "a", "bi", "a+bi" or "a-bi".
  cplx complex_number(const std::string& sec, const std::string& key, const std::string& s) const {
    if (s.empty()) fail(sec, key, "empty number");
    if (s.back() != 'i') return parse_double(sec, key, s);
    const std::string body = s.substr(0, s.size() - 1);
    std::size_t split = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;)
      if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
        split = k;
        break;
      }
    if (split == std::string::npos) {
      const std::string im = body.empty() || body == "+" ? "1" : body == "-" ? "-1" : body;
      return {0.0, parse_double(sec, key, im)};
    }
    std::string im = body.substr(split);
    if (im == "+" || im == "-") im += "1";
    if (im[0] == '+') im = im.substr(1);
    return {parse_double(sec, key, body.substr(0, split)), parse_double(sec, key, im)};
  }

  std::optional<SphericalTriple> triple(const std::string& sec, const std::string& key) const {
    const Value* v = find(sec, key);
    if (!v) return std::nullopt;
    const auto t = tokens(v->text);
    if (t.size() == 1) return SphericalTriple{0.0, complex_number(sec, key, t[0]), 0.0};
    if (t.size() != 3) fail(sec, key, "expected one value or three spherical components (-1 0 +1)");
    return SphericalTriple{complex_number(sec, key, t[0]), complex_number(sec, key, t[1]),
                           complex_number(sec, key, t[2])};
  }

 private:
  double parse_double(const std::string& sec, const std::string& key, const std::string& s) const {
    double out = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(out))
      fail(sec, key, "expected a number, got '" + s + "'");
    return out;
  }

  std::map<std::string, Section> sections_;
  std::map<std::string, int> header_lines_;
};

inline std::string schema_section(const std::string& s) {
  return s == "laser23" || s == "laser13" ? std::string("laser12") : s;
}

inline Reader lex(std::string_view text) {
  std::map<std::string, Section> sections;
  std::map<std::string, int> header_lines;
  std::istringstream is{std::string(text)};
  std::string line;
  int n = 0;
  bool header = false;
  std::string current;
  while (std::getline(is, line)) {
    ++n;
    std::string t = trim(line);
    if (!header) {
      if (t != kHeader)
        throw ConfigError("header", n, "first line must be '" + std::string(kHeader) + "'");
      header = true;
      continue;
    }
    if (const auto hash = t.find('#'); hash != std::string::npos) t = trim(t.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("section", n, "malformed section header '" + t + "'");
      current = trim(t.substr(1, t.size() - 2));
      if (!schema().count(schema_section(current)))
        throw ConfigError(current, n, "unknown section [" + current + "]");
      if (sections.count(current)) throw ConfigError(current, n, "duplicate section [" + current + "]");
      sections[current];
      header_lines[current] = n;
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(current.empty() ? "line" : current, n, "expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (current.empty()) throw ConfigError(key, n, "key outside any section");
    const std::string field = current + "." + key;
    if (!schema().at(schema_section(current)).count(key)) throw ConfigError(field, n, "unknown key");
    if (value.empty()) throw ConfigError(field, n, "missing value");
    if (sections[current].count(key)) throw ConfigError(field, n, "duplicate key");
    sections[current][key] = {value, n};
  }
  if (!header) throw ConfigError("header", 1, "empty config");
  return Reader(std::move(sections), std::move(header_lines));
}

inline LevelIndex parse_level(const Reader& r, const std::string& sec, const std::string& key,
                              const std::string& s) {
  std::vector<int> parts;
  std::istringstream is(s);
  for (std::string p; std::getline(is, p, ':');) {
    int v = 0;
    auto [q, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
    if (ec != std::errc() || q != p.data() + p.size()) r.fail(sec, key, "malformed level '" + s + "'");
    parts.push_back(v);
  }
  if (parts.size() != 4) r.fail(sec, key, "level must be v:J:K:M, got '" + s + "'");
  return {parts[0], {parts[1], parts[2], parts[3]}};
}

}  // namespace detail

/// Checks cross-field constraints; throws ConfigError.
inline void validate(const ScenarioConfig& c) {
  auto bad = [](const std::string& field, const std::string& msg) { throw ConfigError(field, 0, msg); };
  try {
    c.constants.validate();
  } catch (const Error& e) {
    bad("molecule.A", e.what());
  }
  try {
    c.dipole.validate();
  } catch (const Error& e) {
    bad("dipole.mu12", e.what());
  }
  const char* names[3] = {"laser12", "laser23", "laser13"};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& l = c.lasers[k];
    const std::string s = names[k];
    if (!(l.peak_ghz > 0.0)) bad(s + ".peak_ghz", "peak Rabi frequency must be positive");
    if (!(l.beam.waist > 0.0)) bad(s + ".waist", "waist must be positive");
    if (l.polarization == Polarization::Custom) {
      double n2 = 0.0;
      for (const auto& f : l.field) n2 += std::norm(f);
      if (std::abs(n2 - 1.0) > 1e-9) bad(s + ".field", "custom field components must have unit norm");
    }
    if (c.tuning.mode == Tuning::Absolute && !l.frequency_ghz)
      bad(s + ".frequency_ghz", "absolute tuning needs a frequency for every laser");
  }
  if (c.truncation.jmax < 0 || c.truncation.jmax > 20) bad("run.jmax", "jmax must lie in 0..20");
  if (!(c.temperature_k >= 0.0)) bad("run.temperature_k", "temperature must be >= 0");
  if (!(c.t_end > 0.0)) bad("run.t_end", "t_end must be positive");
  if (c.samples < 2) bad("run.samples", "need at least 2 samples");
  if (c.tuning.mode == Tuning::Loop) {
    if (c.tuning.anchor_J < 0 || std::abs(c.tuning.anchor_K) > c.tuning.anchor_J)
      bad("run.loop_anchor", "loop anchor needs J >= 0 and |K| <= J");
    if (c.tuning.anchor_J + 1 > c.truncation.jmax) bad("run.loop_anchor", "loop anchor J + 1 exceeds jmax");
  }
  if (c.restricted_loop) {
    if (c.restricted_states.size() != 3) bad("run.restricted_states", "restricted loop needs three levels");
    std::set<int> vibs;
    for (const auto& l : c.restricted_states) {
      vibs.insert(l.vib);
      if (l.rot.J > c.truncation.jmax || std::abs(l.rot.K) > l.rot.J || std::abs(l.rot.M) > l.rot.J)
        bad("run.restricted_states", "level " + to_string(l) + " outside the basis");
    }
    if (vibs != std::set<int>{1, 2, 3})
      bad("run.restricted_states", "restricted loop needs one level in each vibrational state");
    if (c.preparation != Preparation::Adiabatic)
      bad("run.preparation", "restricted loop runs start from eigenstates: use adiabatic");
  }
  if (c.grid.nx < 3 || !(c.grid.hx > 0.0)) bad("grid.nx", "grid needs nx >= 3 and x_max > x_min");
  if (c.grid.ny < 1 || (c.grid.ny > 1 && !(c.grid.hy > 0.0))) bad("grid.ny", "grid needs y_max > y_min when ny > 1");
  if (!(c.tau_exp_us_min > 0.0 && c.tau_exp_us_max >= c.tau_exp_us_min))
    bad("timescales.tau_exp_us", "need 0 < min <= max");
  if (!(c.tau_lr_ms > 0.0)) bad("timescales.tau_lr_ms", "must be positive");
}

inline ScenarioConfig parse_config(std::string_view text) {
  const detail::Reader r = detail::lex(text);
  ScenarioConfig c;

  if (auto v = r.number("molecule", "A")) c.constants.A = *v;
  if (auto v = r.number("molecule", "B")) c.constants.B = *v;
  if (auto v = r.number("molecule", "C")) c.constants.C = *v;
  if (auto v = r.numbers("molecule", "vib_energies", 3)) c.vib.energy = {(*v)[0], (*v)[1], (*v)[2]};

  const std::pair<const char*, VibPair> dip[3] = {{"12", {1, 2}}, {"23", {2, 3}}, {"13", {1, 3}}};
  for (const auto& [suffix, pair] : dip) {
    auto& t = c.dipole.transitions[pair];
    if (auto v = r.triple("dipole", std::string("mu") + suffix)) t.components = *v;
    if (auto v = r.boolean("dipole", std::string("flip") + suffix)) t.chiral_flip = *v;
  }

  const char* names[3] = {"laser12", "laser23", "laser13"};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string s = names[k];
    if (!r.has_section(s)) throw ConfigError(s, 0, "missing section [" + s + "]: the loop needs all three lasers");
    auto& l = c.lasers[k];
    if (auto v = r.text(s, "polarization")) {
      if (*v == "custom") {
        l.polarization = Polarization::Custom;
      } else if (auto p = parse_polarization(*v)) {
        l.polarization = *p;
      } else {
        r.fail(s, "polarization", "unknown polarization '" + *v + "' (x, y, z, sigma+, sigma-, custom)");
      }
    }
    if (auto v = r.triple(s, "field")) {
      if (l.polarization != Polarization::Custom) r.fail(s, "field", "field is only read for custom polarization");
      l.field = *v;
    } else if (l.polarization == Polarization::Custom) {
      r.fail(s, "polarization", "custom polarization needs a field entry");
    }
    const auto q = r.number(s, "peak_q");
    const auto g = r.number(s, "peak_ghz");
    if (q && g) r.fail(s, "peak_ghz", "give either peak_q or peak_ghz");
    if (q) {
      if (!(*q > 0.0)) r.fail(s, "peak_q", "peak_q must be positive");
      l.peak_ghz = units::rabi_scale_ghz(*q);
    }
    if (g) l.peak_ghz = *g;
    if (auto v = r.number(s, "center_x")) l.beam.center_x = *v;
    if (auto v = r.number(s, "center_y")) l.beam.center_y = *v;
    if (auto v = r.number(s, "waist")) l.beam.waist = *v;
    if (auto v = r.number(s, "phase_gradient_x")) l.beam.phase_gradient_x = *v;
    if (auto v = r.number(s, "phase_gradient_y")) l.beam.phase_gradient_y = *v;
    if (auto v = r.number(s, "frequency_ghz")) l.frequency_ghz = *v;
  }

  if (auto v = r.text("run", "name")) c.name = *v;
  if (auto v = r.number("run", "temperature_k")) c.temperature_k = *v;
  if (auto v = r.text("run", "preparation")) {
    try {
      c.preparation = parse_preparation(*v);
    } catch (const Error&) {
      r.fail("run", "preparation", "unknown preparation '" + *v + "' (adiabatic, diabatic, partially-dressed)");
    }
  }
  if (auto v = r.text("run", "tuning")) {
    if (*v == "ground") c.tuning.mode = Tuning::Ground;
    else if (*v == "loop") c.tuning.mode = Tuning::Loop;
    else if (*v == "absolute") c.tuning.mode = Tuning::Absolute;
    else r.fail("run", "tuning", "unknown tuning '" + *v + "' (ground, loop, absolute)");
  }
  if (auto v = r.numbers("run", "loop_anchor", 2)) {
    if ((*v)[0] != std::floor((*v)[0]) || (*v)[1] != std::floor((*v)[1]))
      r.fail("run", "loop_anchor", "loop anchor is J K (integers)");
    c.tuning.anchor_J = static_cast<int>((*v)[0]);
    c.tuning.anchor_K = static_cast<int>((*v)[1]);
  }
  if (auto v = r.integer("run", "jmax")) c.truncation.jmax = static_cast<int>(*v);
  if (auto v = r.number("run", "t_end")) c.t_end = *v;
  if (auto v = r.integer("run", "samples")) c.samples = static_cast<int>(*v);
  if (auto v = r.text("run", "average_window")) {
    if (*v == "full") c.window = Window::Full;
    else if (*v == "snapped") c.window = Window::Snapped;
    else r.fail("run", "average_window", "expected full or snapped");
  }
  if (auto v = r.numbers("run", "position", 2)) c.position = {(*v)[0], (*v)[1]};
  if (auto v = r.boolean("run", "restricted_loop")) c.restricted_loop = *v;
  if (auto v = r.text("run", "restricted_states"))
    for (const auto& t : detail::tokens(*v)) c.restricted_states.push_back(detail::parse_level(r, "run", "restricted_states", t));
  if (auto v = r.text("run", "enantiomer")) {
    if (*v == "L") c.only = Enantiomer::L;
    else if (*v == "R") c.only = Enantiomer::R;
    else if (*v == "both") c.only.reset();
    else r.fail("run", "enantiomer", "expected L, R or both");
  }
  if (auto v = r.integer("run", "seed")) {
    if (*v < 0) r.fail("run", "seed", "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(*v);
  }

  {
    const double x0 = r.number("grid", "x_min").value_or(-2.0);
    const double x1 = r.number("grid", "x_max").value_or(2.0);
    const auto nx = r.integer("grid", "nx").value_or(201);
    const auto ny = r.integer("grid", "ny").value_or(1);
    if (nx < 3 || !(x1 > x0)) r.fail("grid", "nx", "grid needs nx >= 3 and x_max > x_min");
    if (ny > 1) {
      const double y0 = r.number("grid", "y_min").value_or(-1.0);
      const double y1 = r.number("grid", "y_max").value_or(1.0);
      if (ny < 3 || !(y1 > y0)) r.fail("grid", "ny", "2D grid needs ny >= 3 and y_max > y_min");
      c.grid = dressed::Grid::plane(x0, x1, static_cast<int>(nx), y0, y1, static_cast<int>(ny));
    } else {
      if (ny < 1) r.fail("grid", "ny", "ny must be >= 1");
      c.grid = dressed::Grid::line(x0, x1, static_cast<int>(nx));
    }
  }

  for (auto& [key, value] : c.outputs)
    if (auto v = r.text("output", key)) {
      if (v->find('/') != std::string::npos) r.fail("output", key, "output names are file names inside --out");
      value = *v;
    }

  if (auto v = r.numbers("timescales", "tau_exp_us", 2)) {
    c.tau_exp_us_min = (*v)[0];
    c.tau_exp_us_max = (*v)[1];
  }
  if (auto v = r.number("timescales", "tau_lr_ms")) c.tau_lr_ms = *v;

  // Attach line numbers to cross-field failures where the key was given.
  try {
    validate(c);
  } catch (const ConfigError& e) {
    const auto dot = e.field().find('.');
    const detail::Value* v = dot == std::string::npos ? nullptr
                                               : r.find(e.field().substr(0, dot), e.field().substr(dot + 1));
    throw ConfigError(e.field(), v ? v->line : 0, e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Builtins

struct Builtin {
  std::string_view name;
  std::string_view text;
};

inline constexpr std::string_view kFig5Ground = R"(chiralrot-scenario v1
# Partially dressed start, T = 0.5 K, lasers x (1-2), x (2-3), z (1-3),
# each resonant between the rotational ground states.

[molecule]
A = 76.15
B = 6.401
C = 6.399

[dipole]
mu12 = 1
mu23 = 1
mu13 = 1

[laser12]
polarization = x
peak_q = 1000

[laser23]
polarization = x
peak_q = 1000
center_x = -0.5

[laser13]
polarization = z
peak_q = 1000
center_x = 0.5

[run]
name = fig5-T0.5K-xxz-groundres
temperature_k = 0.5
preparation = partially-dressed
tuning = ground
jmax = 8
t_end = 40
samples = 2000
position = 0 0
)";

inline constexpr std::string_view kFig5Loop = R"(chiralrot-scenario v1
# As fig5-T0.5K-xxz-groundres, but the lasers are resonant on
# |1>|1 1 M> <-> |2>|2 1 M> <-> |3>|1 1 M>.

[molecule]
A = 76.15
B = 6.401
C = 6.399

[dipole]
mu12 = 1
mu23 = 1
mu13 = 1

[laser12]
polarization = x
peak_q = 1000

[laser23]
polarization = x
peak_q = 1000
center_x = -0.5

[laser13]
polarization = z
peak_q = 1000
center_x = 0.5

[run]
name = fig5-T0.5K-xxz-loopres
temperature_k = 0.5
preparation = partially-dressed
tuning = loop
loop_anchor = 1 1
jmax = 8
t_end = 40
samples = 2000
position = 0 0
)";

inline constexpr std::string_view kFig7 = R"(chiralrot-scenario v1
# Partially dressed start from the rotational ground state (T = 1 mK).

[molecule]
A = 76.15
B = 6.401
C = 6.399

[dipole]
mu12 = 1
mu23 = 1
mu13 = 1

[laser12]
polarization = x
peak_q = 1000

[laser23]
polarization = x
peak_q = 1000
center_x = -0.5

[laser13]
polarization = z
peak_q = 1000
center_x = 0.5

[run]
name = fig7-1mK-xxz
temperature_k = 0.001
preparation = partially-dressed
tuning = ground
jmax = 3
t_end = 40
samples = 2000
position = 0 0
)";

inline constexpr std::string_view kRestricted = R"(chiralrot-scenario v1
# Basis cut to the single 3-loop |1 111> - |2 110> - |3 111>, all detunings
# zero. Each branch starts in an eigenstate of the restricted H(0).

[molecule]
A = 76.15
B = 6.401
C = 6.399

[dipole]
mu12 = 1
mu23 = 1
mu13 = 1

[laser12]
polarization = x
peak_q = 1000

[laser23]
polarization = x
peak_q = 1000
center_x = -0.5

[laser13]
polarization = z
peak_q = 1000
center_x = 0.5

[run]
name = restricted-loop
temperature_k = 0
preparation = adiabatic
tuning = ground
jmax = 2
t_end = 40
samples = 2000
position = 0 0
restricted_loop = true
restricted_states = 1:1:1:1 2:1:1:0 3:1:1:1
)";

inline const std::vector<Builtin>& builtins() {
  static const std::vector<Builtin> b{{"fig5-T0.5K-xxz-groundres", kFig5Ground},
                                      {"fig5-T0.5K-xxz-loopres", kFig5Loop},
                                      {"fig7-1mK-xxz", kFig7},
                                      {"restricted-loop", kRestricted}};
  return b;
}

inline ScenarioConfig builtin(std::string_view name) {
  for (const auto& b : builtins())
    if (b.name == name) return parse_config(b.text);
  std::string known;
  for (const auto& b : builtins()) known += (known.empty() ? "" : ", ") + std::string(b.name);
  throw ConfigError("builtin", 0, "unknown builtin '" + std::string(name) + "' (" + known + ")");
}

// ---------------------------------------------------------------------------
// Runs

struct LoopCensus {
  std::size_t total = 0;            // 3-cycles in the transition graph
  std::size_t through_initial = 0;  // containing a populated initial level
  std::size_t same_labels = 0;      // all three levels share J K M
  std::vector<std::vector<int>> cycles;
};

struct RunResult {
  ScenarioConfig config;
  double omega_unit = 0.0;  // GHz
  std::vector<double> times;
  std::vector<std::string> labels;  // one per initial branch
  std::vector<PotentialTrace> left, right;
  std::vector<double> expected;  // restricted loop: dressed eigenvalues of R, units of omega_unit
  std::vector<double> expected_left;
  CouplingMatrix hl, hr;
  std::string isospectral_status;
  double isospectral_residual = 0.0;
  LoopCensus census;
  std::size_t members = 0;
  double dropped_weight = 0.0;
  std::vector<std::string> warnings;
};

inline AssembleInput assemble_input(const ScenarioConfig& c) {
  AssembleInput in;
  in.lasers = c.laser_set();
  in.dipole = c.dipole;
  in.constants = c.constants;
  in.vib = c.vib;
  in.truncation = c.truncation;
  in.r = c.position;
  return in;
}

/// 3-cycles of the transition graph; `initial` marks populated start levels.
inline LoopCensus loop_census(const CouplingMatrix& h, const std::vector<LevelIndex>& initial) {
  LoopCensus c;
  const auto g = transition_graph(h);
  c.cycles = loops::find_loops(g, {3, std::nullopt, 1000000});
  c.total = c.cycles.size();
  std::set<std::size_t> start;
  for (const auto& l : initial) start.insert(h.index_of(l));
  for (const auto& cyc : c.cycles) {
    bool through = false;
    std::set<RotState> rot;
    for (int v : cyc) {
      through = through || start.count(static_cast<std::size_t>(v));
      rot.insert(h.basis[static_cast<std::size_t>(v)].rot);
    }
    c.through_initial += through;
    c.same_labels += rot.size() == 1;
  }
  return c;
}

inline dressed::LoopOmegas rotationless_omegas(const ScenarioConfig& c, Enantiomer who, const Position& r) {
  const LaserSet l = c.laser_set();
  return {rotationless_rabi(l[0], c.dipole, who, r), rotationless_rabi(l[1], c.dipole, who, r),
          rotationless_rabi(l[2], c.dipole, who, r)};
}

/// f_ij Omega_ij around a restricted loop, with f = <f|rotational part|i> E_sigma.
inline dressed::LoopOmegas restricted_loop_omegas(const ScenarioConfig& c, Enantiomer who) {
  std::map<int, LevelIndex> by_vib;
  for (const auto& l : c.restricted_states) by_vib[l.vib] = l;
  const LaserSet lasers = c.laser_set();
  const auto w0 = rotationless_omegas(c, who, c.position);
  auto factor = [&](const LaserSpec& l, const LevelIndex& f, const LevelIndex& i) {
    const int s = f.rot.M - i.rot.M, sp = f.rot.K - i.rot.K;
    if (std::abs(s) > 1 || sp != 0) return cplx(0.0);
    return wigner::rot_integral(f.rot, i.rot, s, sp) * l.field[static_cast<std::size_t>(s + 1)];
  };
  return {w0.o12 * factor(lasers[0], by_vib[2], by_vib[1]), w0.o23 * factor(lasers[1], by_vib[3], by_vib[2]),
          w0.o13 * factor(lasers[2], by_vib[3], by_vib[1])};
}

inline RunResult run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  RunResult res;
  res.config = cfg;
  res.omega_unit = cfg.omega_unit();
  const AssembleInput in = assemble_input(cfg);
  res.hl = assemble(in, Enantiomer::L);
  res.hr = assemble(in, Enantiomer::R);

  try {
    const auto T = chirality_transform(in.lasers, in.dipole, res.hl.basis);
    for (double t : {0.0, 0.37, 1.9})
      res.isospectral_residual = std::max(res.isospectral_residual, transform_residual(T, res.hl, res.hr, t));
    res.isospectral_status = res.isospectral_residual < 1e-12 ? "ok" : "violated";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnsupportedSetup) throw;
    res.isospectral_status = "not-catalogued";
  }

  ThermalRotState thermal;
  try {
    thermal = thermal_rot_state(cfg.temperature_k, cfg.constants, cfg.truncation);
  } catch (const Error& e) {
    throw ConfigError("run.jmax", 0, e.what(), e.code());
  }
  std::vector<LevelIndex> initial;
  for (std::size_t k = 0; k < thermal.states.size(); ++k)
    if (thermal.probabilities[k] >= PrepareOptions{}.weight_cutoff) initial.push_back({1, thermal.states[k]});
  res.census = loop_census(res.hl, initial);

  CouplingMatrix hl = res.hl, hr = res.hr;
  if (cfg.restricted_loop) {
    hl = restrict_to(res.hl, cfg.restricted_states, true);
    hr = restrict_to(res.hr, cfg.restricted_states, true);
    if (hl.entries.size() != 3)
      throw ConfigError("run.restricted_states", 0,
                        "restricted levels are not a closed 3-loop under these lasers (" +
                            std::to_string(hl.entries.size()) + " couplings)");
  }

  const double t_end_ns = cfg.t_end / res.omega_unit;
  res.times = linspace_times(t_end_ns, cfg.samples);
  const double window = cfg.window == Window::Snapped ? snapped_window(res.hr, t_end_ns) : t_end_ns;

  auto run_one = [&](Enantiomer who, const CouplingMatrix& h) {
    std::vector<PotentialTrace> out;
    const Evolver ev(h);
    auto add = [&](const Ensemble& ens) {
      res.members = std::max(res.members, ens.members.size());
      res.dropped_weight = std::max(res.dropped_weight, ens.dropped_weight);
      for (const auto& w : ens.warnings) res.warnings.push_back(std::string(to_string(who)) + ": " + w);
      out.push_back(ensemble_trace(ev, ens, res.times, res.omega_unit, window));
    };
    if (cfg.restricted_loop) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(evaluate_dense(h, 0.0));
      for (int n = 0; n < 3; ++n) {
        Ensemble e;
        e.members.push_back({1.0, es.eigenvectors().col(n), cfg.restricted_states.front()});
        add(e);
      }
    } else if (cfg.preparation == Preparation::PartiallyDressed) {
      const auto d = dressed::dress(rotationless_omegas(cfg, who, cfg.position));
      if (d.degenerate) res.warnings.push_back(std::string(to_string(who)) + ": dressed states degenerate at the evaluation position");
      for (int n = 0; n < 3; ++n)
        add(prepare_initial(Preparation::PartiallyDressed, h, thermal, Eigen::Vector3cd(d.eigenvectors.col(n))));
    } else {
      add(prepare_initial(cfg.preparation, h, thermal));
    }
    return out;
  };

  if (cfg.restricted_loop || cfg.preparation == Preparation::PartiallyDressed)
    res.labels = {"branch1", "branch2", "branch3"};
  else
    res.labels = {"thermal"};
  if (cfg.wants(Enantiomer::L)) res.left = run_one(Enantiomer::L, hl);
  if (cfg.wants(Enantiomer::R)) res.right = run_one(Enantiomer::R, hr);

  if (cfg.restricted_loop) {
    for (auto who : {Enantiomer::R, Enantiomer::L}) {
      const auto d = dressed::dress(restricted_loop_omegas(cfg, who));
      auto& dst = who == Enantiomer::R ? res.expected : res.expected_left;
      for (int n = 0; n < 3; ++n) dst.push_back(d.eigenvalues[n] / res.omega_unit);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Time scales

struct TimescaleReport {
  double inv_a_ns = 0.0;
  double inv_b_ns = 0.0;
  double inv_c_ns = 0.0;
  double tau_delta_ns = 0.0;  // slowest rotational period, 1/min(A, B, C)
  double omega12_ghz = 0.0;
  double tau_omega_ns = 0.0;
  std::size_t basis_size = 0;
  double max_detuning_ghz = 0.0;
  double tau_exp_us_min = 0.0;
  double tau_exp_us_max = 0.0;
  double tau_lr_ms = 0.0;
  bool delta_faster_than_omega = false;
  bool separated = false;  // tau_Delta < tau_Omega << tau_exp << tau_LR (factor 100)
};

inline TimescaleReport timescale_report(const ScenarioConfig& c) {
  validate(c);
  TimescaleReport r;
  r.inv_a_ns = 1.0 / c.constants.A;
  r.inv_b_ns = 1.0 / c.constants.B;
  r.inv_c_ns = 1.0 / c.constants.C;
  r.tau_delta_ns = 1.0 / std::min({c.constants.A, c.constants.B, c.constants.C});
  r.omega12_ghz = c.omega_unit();
  r.tau_omega_ns = 1.0 / r.omega12_ghz;
  const auto h = assemble(assemble_input(c), Enantiomer::R);
  r.basis_size = h.size();
  r.max_detuning_ghz = h.max_abs_delta();
  r.tau_exp_us_min = c.tau_exp_us_min;
  r.tau_exp_us_max = c.tau_exp_us_max;
  r.tau_lr_ms = c.tau_lr_ms;
  r.delta_faster_than_omega = r.tau_delta_ns < r.tau_omega_ns;
  r.separated = r.delta_faster_than_omega && 100.0 * r.tau_omega_ns <= 1e3 * r.tau_exp_us_min &&
                100.0 * r.tau_exp_us_max * 1e-3 <= r.tau_lr_ms;
  return r;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::ostringstream sci() {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(12);
  return os;
}

inline void kv(std::ostringstream& os, const std::string& k, double v) { os << k << " = " << v << '\n'; }
inline void kv(std::ostringstream& os, const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; }

}  // namespace detail

inline std::string traces_csv(const RunResult& r) {
  auto os = detail::sci();
  os << "time_ns,time_in_inverse_Omega12";
  for (const auto& l : r.labels) {
    if (!r.left.empty()) os << ",value_L_" << l;
    if (!r.right.empty()) os << ",value_R_" << l;
  }
  os << '\n';
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    os << r.times[k] << ',' << r.times[k] * r.omega_unit;
    for (std::size_t b = 0; b < r.labels.size(); ++b) {
      if (!r.left.empty()) os << ',' << r.left[b].values[k];
      if (!r.right.empty()) os << ',' << r.right[b].values[k];
    }
    os << '\n';
  }
  return os.str();
}

inline std::string loops_csv(const CouplingMatrix& h, const LoopCensus& c) {
  std::ostringstream os;
  os << "cycle,level_1,level_2,level_3,same_labels\n";
  for (std::size_t k = 0; k < c.cycles.size(); ++k) {
    os << k;
    std::set<RotState> rot;
    for (int v : c.cycles[k]) {
      os << ',' << to_string(h.basis[static_cast<std::size_t>(v)]);
      rot.insert(h.basis[static_cast<std::size_t>(v)].rot);
    }
    os << ',' << (rot.size() == 1 ? "yes" : "no") << '\n';
  }
  return os.str();
}

inline double max_abs_difference(const PotentialTrace& a, const PotentialTrace& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) d = std::max(d, std::abs(a.values[k] - b.values[k]));
  return d;
}

inline std::string summary_text(const RunResult& r) {
  const auto& c = r.config;
  auto os = detail::sci();
  detail::kv(os, "scenario", c.name);
  detail::kv(os, "preparation", c.restricted_loop ? "restricted-loop-eigenstates" : to_string(c.preparation));
  detail::kv(os, "tuning", c.tuning.mode == Tuning::Ground ? "ground" : c.tuning.mode == Tuning::Loop ? "loop" : "absolute");
  detail::kv(os, "temperature_k", c.temperature_k);
  detail::kv(os, "jmax", std::to_string(c.truncation.jmax));
  detail::kv(os, "basis_size", std::to_string(r.hr.size()));
  detail::kv(os, "coupling_entries", std::to_string(r.hr.entries.size()));
  detail::kv(os, "omega12_max_ghz", r.omega_unit);
  detail::kv(os, "tau_omega_ns", 1.0 / r.omega_unit);
  detail::kv(os, "t_end_ns", r.times.back());
  detail::kv(os, "samples", std::to_string(r.times.size()));
  const auto& any = r.right.empty() ? r.left : r.right;
  detail::kv(os, "average_window_ns", any.empty() ? 0.0 : any.front().window);
  detail::kv(os, "ensemble_members", std::to_string(r.members));
  detail::kv(os, "dropped_weight", r.dropped_weight);
  detail::kv(os, "isospectral_status", r.isospectral_status);
  detail::kv(os, "isospectral_residual", r.isospectral_residual);
  detail::kv(os, "loops3_total", std::to_string(r.census.total));
  detail::kv(os, "loops3_through_initial", std::to_string(r.census.through_initial));
  detail::kv(os, "loops3_same_labels", std::to_string(r.census.same_labels));
  for (std::size_t b = 0; b < r.labels.size(); ++b) {
    const std::string& l = r.labels[b];
    for (auto [side, traces] : {std::pair{"L", &r.left}, std::pair{"R", &r.right}}) {
      if (traces->empty()) continue;
      const auto& t = (*traces)[b];
      double mx = 0.0;
      for (double v : t.values) mx = std::max(mx, std::abs(v));
      detail::kv(os, std::string("time_average_") + side + "_" + l, t.time_average);
      detail::kv(os, std::string("sample_mean_") + side + "_" + l, t.sample_mean);
      detail::kv(os, std::string("max_abs_") + side + "_" + l, mx);
    }
    if (!r.left.empty() && !r.right.empty())
      detail::kv(os, "max_lr_difference_" + l, max_abs_difference(r.left[b], r.right[b]));
  }
  for (std::size_t n = 0; n < r.expected.size(); ++n) {
    detail::kv(os, "expected_R_branch" + std::to_string(n + 1), r.expected[n]);
    detail::kv(os, "expected_L_branch" + std::to_string(n + 1), r.expected_left[n]);
  }
  detail::kv(os, "warnings", std::to_string(r.warnings.size()));
  for (std::size_t k = 0; k < r.warnings.size(); ++k) detail::kv(os, "warning_" + std::to_string(k + 1), r.warnings[k]);
  return os.str();
}

inline std::string timescales_text(const TimescaleReport& t) {
  auto os = detail::sci();
  detail::kv(os, "inv_A_ns", t.inv_a_ns);
  detail::kv(os, "inv_B_ns", t.inv_b_ns);
  detail::kv(os, "inv_C_ns", t.inv_c_ns);
  detail::kv(os, "tau_delta_ns", t.tau_delta_ns);
  detail::kv(os, "omega12_max_ghz", t.omega12_ghz);
  detail::kv(os, "tau_omega_ns", t.tau_omega_ns);
  detail::kv(os, "basis_size", std::to_string(t.basis_size));
  detail::kv(os, "max_detuning_ghz", t.max_detuning_ghz);
  detail::kv(os, "tau_exp_us_min", t.tau_exp_us_min);
  detail::kv(os, "tau_exp_us_max", t.tau_exp_us_max);
  detail::kv(os, "tau_lr_ms", t.tau_lr_ms);
  detail::kv(os, "tau_delta_below_tau_omega", t.delta_faster_than_omega ? "yes" : "no");
  detail::kv(os, "time_scales_separated", t.separated ? "yes" : "no");
  return os.str();
}

/// Dressed potentials of the rotationless loop on the config grid (GHz and
/// inverse grid lengths); no trap.
inline std::string dressed_csv(const ScenarioConfig& c, Enantiomer who) {
  const dressed::FieldConfiguration f{c.laser_set()[0], c.laser_set()[1], c.laser_set()[2], c.dipole};
  const auto fr = dressed::build_frame(f, who, c.grid);
  std::array<std::vector<double>, 3> v;
  std::array<dressed::VectorField, 3> a;
  for (int n = 0; n < 3; ++n) {
    v[static_cast<std::size_t>(n)] = dressed::scalar_potential(fr, n);
    a[static_cast<std::size_t>(n)] = dressed::vector_potential(fr, n);
  }
  auto os = detail::sci();
  os << "x,y,V1,V2,V3,Ax1,Ax2,Ax3,Ay1,Ay2,Ay3\n";
  for (int iy = 0; iy < c.grid.ny; ++iy)
    for (int ix = 0; ix < c.grid.nx; ++ix) {
      const auto p = c.grid.index(ix, iy);
      const Position r = c.grid.at(ix, iy);
      os << r.x << ',' << r.y;
      for (int n = 0; n < 3; ++n) os << ',' << v[static_cast<std::size_t>(n)][p];
      for (int n = 0; n < 3; ++n) os << ',' << a[static_cast<std::size_t>(n)].ax[p];
      for (int n = 0; n < 3; ++n) os << ',' << a[static_cast<std::size_t>(n)].ay[p];
      os << '\n';
    }
  return os.str();
}

}  // namespace chiralrot::scenario
