// chiralrot: run scenarios of rotating chiral molecules in a three-laser loop.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chiralrot/looptopology.hpp"
#include "chiralrot/scenario.hpp"

namespace fs = std::filesystem;
using namespace chiralrot;

namespace {

struct Common {
  std::string config_path;
  std::string builtin_name;
  std::string out = ".";
  std::optional<std::int64_t> seed;
  std::optional<int> jmax;
  std::string enantiomer;
};

void add_common(CLI::App* app, Common& c) {
  auto* cfg = app->add_option("--config", c.config_path, "Scenario config file");
  auto* b = app->add_option("--builtin", c.builtin_name, "Builtin scenario name");
  cfg->excludes(b);
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "Random seed override");
  app->add_option("--jmax", c.jmax, "Rotational truncation override");
  app->add_option("--enantiomer", c.enantiomer, "L, R or both")->check(CLI::IsMember({"L", "R", "both"}));
}

scenario::ScenarioConfig load(const Common& c) {
  scenario::ScenarioConfig cfg;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw scenario::ConfigError("config", 0, "cannot read '" + c.config_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg = scenario::parse_config(ss.str());
  } else if (!c.builtin_name.empty()) {
    cfg = scenario::builtin(c.builtin_name);
  } else {
    throw scenario::ConfigError("config", 0, "give --config PATH or --builtin NAME");
  }
  if (c.seed) {
    if (*c.seed < 0) throw scenario::ConfigError("run.seed", 0, "seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(*c.seed);
  }
  if (c.jmax) cfg.truncation.jmax = *c.jmax;
  if (c.enantiomer == "L") cfg.only = Enantiomer::L;
  if (c.enantiomer == "R") cfg.only = Enantiomer::R;
  if (c.enantiomer == "both") cfg.only.reset();
  try {
    scenario::validate(cfg);
  } catch (const scenario::ConfigError& e) {
    // Overrides come from flags, not config lines.
    throw scenario::ConfigError(e.field(), 0, e.what(), e.code());
  }
  return cfg;
}

fs::path write(const Common& c, const std::string& name, const std::string& body) {
  fs::create_directories(c.out);
  const fs::path p = fs::path(c.out) / name;
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write '" + p.string() + "'");
  os << body;
  return p;
}

std::string quoted(std::string s) {
  for (auto& ch : s)
    if (ch == '"' || ch == '\n') ch = '\'';
  return '"' + s + '"';
}

void write_couplings(const Common& c, const scenario::ScenarioConfig& cfg, const CouplingMatrix& hl,
                     const CouplingMatrix& hr) {
  const std::string stem = cfg.outputs.at("couplings");
  if (cfg.wants(Enantiomer::L)) std::cout << "wrote " << write(c, stem + "_L.csv", couplings_csv(hl)).string() << '\n';
  if (cfg.wants(Enantiomer::R)) std::cout << "wrote " << write(c, stem + "_R.csv", couplings_csv(hr)).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chiral molecules with rotations in a closed three-laser loop"};
  app.require_subcommand(1);

  Common run_opt, loops_opt, dressed_opt, times_opt, dump_opt;
  auto* run = app.add_subcommand("run", "Propagate a scenario and write traces, couplings, loops and a summary");
  add_common(run, run_opt);
  auto* loops_cmd = app.add_subcommand("loops", "List 3-cycles of the transition graph");
  add_common(loops_cmd, loops_opt);
  auto* dressed_cmd = app.add_subcommand("dressed-potentials", "Scalar and vector potentials of the rotationless loop");
  add_common(dressed_cmd, dressed_opt);
  auto* times_cmd = app.add_subcommand("timescales", "Report the characteristic time scales");
  add_common(times_cmd, times_opt);
  auto* dump = app.add_subcommand("dump-couplings", "Write the coupling tables");
  add_common(dump, dump_opt);

  auto* flips = app.add_subcommand("flip-sensitivity", "Spectral effect of sign flips on random n-loops");
  std::string flips_out = ".";
  std::uint64_t flips_seed = 1;
  int draws = 50;
  std::vector<int> sizes{3, 4, 5, 6};
  flips->add_option("--out", flips_out, "Output directory")->capture_default_str();
  flips->add_option("--seed", flips_seed, "Random seed")->capture_default_str();
  flips->add_option("--draws", draws, "Weight draws per loop size")->check(CLI::PositiveNumber)->capture_default_str();
  flips->add_option("--sizes", sizes, "Loop sizes")->check(CLI::Range(3, 12));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = load(run_opt);
      const auto res = scenario::run_scenario(cfg);
      std::cout << "wrote " << write(run_opt, cfg.outputs.at("traces"), scenario::traces_csv(res)).string() << '\n';
      write_couplings(run_opt, cfg, res.hl, res.hr);
      std::cout << "wrote " << write(run_opt, cfg.outputs.at("loops"), scenario::loops_csv(res.hl, res.census)).string() << '\n';
      std::cout << "wrote " << write(run_opt, cfg.outputs.at("summary"), scenario::summary_text(res)).string() << '\n';
      for (const auto& w : res.warnings) std::cerr << "WARNING " << w << '\n';
    } else if (*loops_cmd) {
      const auto cfg = load(loops_opt);
      const auto h = assemble(scenario::assemble_input(cfg), Enantiomer::R);
      const auto th = thermal_rot_state(cfg.temperature_k, cfg.constants, cfg.truncation);
      std::vector<LevelIndex> initial;
      for (std::size_t k = 0; k < th.states.size(); ++k)
        if (th.probabilities[k] >= PrepareOptions{}.weight_cutoff) initial.push_back({1, th.states[k]});
      const auto census = scenario::loop_census(h, initial);
      std::cout << "loops3_total = " << census.total << '\n'
                << "loops3_through_initial = " << census.through_initial << '\n'
                << "loops3_same_labels = " << census.same_labels << '\n';
      std::cout << "wrote " << write(loops_opt, cfg.outputs.at("loops"), scenario::loops_csv(h, census)).string() << '\n';
    } else if (*dressed_cmd) {
      const auto cfg = load(dressed_opt);
      const std::string stem = cfg.outputs.at("dressed");
      for (auto who : {Enantiomer::L, Enantiomer::R})
        if (cfg.wants(who))
          std::cout << "wrote "
                    << write(dressed_opt, stem + "_" + std::string(to_string(who)) + ".csv",
                             scenario::dressed_csv(cfg, who)).string()
                    << '\n';
    } else if (*times_cmd) {
      const auto cfg = load(times_opt);
      const std::string text = scenario::timescales_text(scenario::timescale_report(cfg));
      std::cout << text;
      write(times_opt, "timescales.txt", text);
    } else if (*dump) {
      const auto cfg = load(dump_opt);
      const auto in = scenario::assemble_input(cfg);
      write_couplings(dump_opt, cfg, assemble(in, Enantiomer::L), assemble(in, Enantiomer::R));
    } else if (*flips) {
      const auto rows = loops::flip_table(sizes, draws, flips_seed);
      std::size_t bad = 0;
      for (const auto& r : rows) bad += !r.parity_consistent;
      fs::create_directories(flips_out);
      const fs::path p = fs::path(flips_out) / "flip_table.csv";
      std::ofstream(p, std::ios::binary) << loops::flip_table_csv(rows);
      std::cout << "patterns = " << rows.size() << "\nparity_inconsistent = " << bad << "\nwrote " << p.string() << '\n';
    }
  } catch (const scenario::ConfigError& e) {
    std::cerr << "ERROR code=" << to_string(e.code()) << " field=" << e.field() << " line=" << e.line()
              << " message=" << quoted(e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "ERROR code=" << to_string(e.code()) << " field=- line=0 message=" << quoted(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ERROR code=internal field=- line=0 message=" << quoted(e.what()) << '\n';
    return 1;
  }
  return 0;
}
