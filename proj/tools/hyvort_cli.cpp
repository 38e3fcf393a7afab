#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hyvort/config.hpp"
#include "hyvort/error.hpp"
#include "hyvort/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::string> out;
  std::optional<long> seed;
  std::optional<int> level;
  std::optional<std::string> eps;
  std::optional<int> threads;
  std::vector<std::string> set;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "INI file with [section] key = value entries")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "RNG seed (emulator shot noise)");
  sub->add_option("--level", c.level, "grid level");
  sub->add_option("--eps", c.eps, "eps value or comma-separated list");
  sub->add_option("--threads", c.threads, "worker threads");
  sub->add_option("--set", c.set, "override section.key=value")->take_all();
}

hyvort::ExperimentConfig build_config(const std::string& experiment, const Common& c) {
  hyvort::ExperimentConfig cfg;
  cfg.out = "out/" + experiment;
  cfg.experiment = experiment;
  if (!c.config.empty()) cfg = hyvort::load_config(c.config, cfg);
  cfg.experiment = experiment;
  for (const auto& kv : c.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      hyvort::fail(hyvort::Errc::Configuration, "--set expects section.key=value, got " + kv);
    hyvort::set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.out) cfg.out = *c.out;
  if (c.seed) hyvort::set_option(cfg, "run.seed", std::to_string(*c.seed));
  if (c.threads) cfg.threads = *c.threads;
  if (c.level) cfg.level = *c.level;
  if (c.eps) {
    const auto list = hyvort::parse_list(*c.eps);
    cfg.eps_list = list;
    cfg.eps = list.front();
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid vortex-dynamics solvers: reduced laws, harmonic correction, emulated "
               "quantum linear solves, reference NLS and filaments"};
  app.require_subcommand(1);
  Common common;
  const std::vector<std::pair<std::string, std::string>> subs{
      {"m1", "decoupled reduced trajectory and outer reconstruction"},
      {"m2", "boundary-coupled reduced trajectory with harmonic feedback"},
      {"sweep", "eps sweep of masked M1/M2 errors against the full NLS"},
      {"schrod-check", "Schrodingerization pipeline against the direct harmonic solve"},
      {"gl-demo", "full NLS run with snapshots and GL reduced trajectories"},
      {"filament-demo", "filament curvature flow and London field"},
      {"checks", "property checks with a pass/fail report"}};
  for (const auto& [name, help] : subs) add_common(app.add_subcommand(name, help), common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string experiment = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = build_config(experiment, common);
    const auto outcome = hyvort::run_experiment(cfg, std::cout);
    std::cout << "wrote " << outcome.files.size() << " files to " << cfg.out << '\n';
    return outcome.exit_code;
  } catch (const hyvort::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == hyvort::Errc::Configuration ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
