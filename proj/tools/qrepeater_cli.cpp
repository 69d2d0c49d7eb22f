// qrepeater: rate models, protocol simulation, tomography and node physics
// from the command line. Exit codes: 0 ok, 1 input or config error,
// 2 numerical failure, 3 reproduce --strict with a check outside its band.
#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace qrep::cli;

int main(int argc, char** argv) {
  CLI::App app{"Quantum repeater node models"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path, format;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_path, "Output file (default stdout)");
  app.add_option("--seed", seed, "Random seed (default 0)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--strict", strict, "Nonzero exit when a reproduce check fails");

  RatesArgs rates;
  auto* c_rates = app.add_subcommand("rates", "Rate and key-rate curves versus length (CSV)");
  c_rates->add_option("--lmin", rates.lmin, "Shortest length, km");
  c_rates->add_option("--lmax", rates.lmax, "Longest length, km");
  c_rates->add_option("--step", rates.step, "Length step, km");

  SkrArgs skr;
  auto* c_skr = app.add_subcommand("skr", "Secret key rate at one length");
  c_skr->add_option("--length", skr.length, "Total length, km");

  ChainArgs chain;
  auto* c_chain = app.add_subcommand("chain", "Time and fidelity of a nested repeater chain");
  c_chain->add_option("--levels", chain.levels, "Nesting levels");
  c_chain->add_option("--l0", chain.l0, "Elementary link length, km");
  c_chain->add_option("--p0", chain.p0, "Photon detection probability per attempt");
  c_chain->add_option("--t0", chain.t0, "Attempt time, s");
  c_chain->add_option("--f0", chain.f0, "Ion-photon fidelity");
  c_chain->add_option("--fswap", chain.f_swap, "Ion swap fidelity");
  c_chain->add_option("--visibility", chain.v, "Two-photon interference visibility");

  BoundsArgs bounds;
  auto* c_bounds = app.add_subcommand("bounds", "Conditions for a repeater advantage");
  c_bounds->add_option("--p0", bounds.p0, "Photon detection probability per attempt");
  c_bounds->add_option("--gamma", bounds.gamma, "Fiber loss, 1/km (10^-gamma L)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte-Carlo run of the protocol");
  c_sim->add_option("--trials", sim.trials, "Number of protocol runs");
  c_sim->add_option("--mode", sim.mode, "measured, repeater or direct")
      ->check(CLI::IsMember({"measured", "repeater", "direct"}));
  c_sim->add_option("--length", sim.length, "Total length for repeater/direct modes, km");

  TomoArgs tomo;
  auto* c_tomo = app.add_subcommand("tomo", "Reconstruct photon-photon states from a count file");
  c_tomo->add_option("--in", tomo.in, "Dataset JSON");
  c_tomo->add_option("--synthesize", tomo.synthesize, "Write a dataset for this Bell state instead");
  c_tomo->add_option("--counts", tomo.counts, "Expected heralds per setting when synthesizing");
  c_tomo->add_option("--resamples", tomo.resamples, "Monte-Carlo resamples for error bars (0 disables)");

  SpinEchoArgs echo;
  auto* c_echo = app.add_subcommand("spinecho", "Echo visibility for a motional state");
  c_echo->add_option("--temps", echo.temps, "start, mid, end or a JSON file with nbar (and eta)");
  c_echo->add_option("--echoes", echo.echoes, "Number of echoes");
  c_echo->add_option("--grid", echo.grid, "Phonon cutoff per mode");
  c_echo->add_option("--miscalibration", echo.miscalibration, "Fractional pulse-length error");
  c_echo->add_option("--phases", echo.phases, "Laser phases of the three pulses, e.g. 0,pi,0");

  CouplingArgs coupling;
  auto* c_coupling = app.add_subcommand("coupling", "Cavity coupling of the two-ion string");
  c_coupling->add_flag("--offset-scan", coupling.offset_scan, "CSV over one half wavelength");
  c_coupling->add_option("--step", coupling.step, "Scan step, nm");

  BudgetArgs budget;
  auto* c_budget = app.add_subcommand("budget", "Product of detection efficiency factors");
  c_budget->add_option("--factors", budget.factors, "JSON list of [value, sigma]");

  ReproduceArgs repro;
  bool repro_json = false;
  auto* c_repro = app.add_subcommand("reproduce", "Table of headline numbers with pass/fail");
  c_repro->add_option("--grid", repro.grid, "Phonon cutoff for the spin-echo rows");
  c_repro->add_flag("--json", repro_json, "Same as --format json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_path.empty()) cfg.output = out_path;
    if (seed) cfg.seed = *seed;
    if (!format.empty()) {
      cfg.format = format == "csv" ? Format::csv : Format::json;
      cfg.format_given = true;
    }
    if (repro_json) {
      cfg.format = Format::json;
      cfg.format_given = true;
    }
    cfg.strict = strict;

    std::ostream& out = std::cout;
    if (c_rates->parsed()) return cmd_rates(cfg, rates, out);
    if (c_skr->parsed()) return cmd_skr(cfg, skr, out);
    if (c_chain->parsed()) return cmd_chain(cfg, chain, out);
    if (c_bounds->parsed()) return cmd_bounds(cfg, bounds, out);
    if (c_sim->parsed()) return cmd_simulate(cfg, sim, out);
    if (c_tomo->parsed()) return cmd_tomo(cfg, tomo, out);
    if (c_echo->parsed()) return cmd_spinecho(cfg, echo, out);
    if (c_coupling->parsed()) return cmd_coupling(cfg, coupling, out);
    if (c_budget->parsed()) return cmd_budget(cfg, budget, out);
    if (c_repro->parsed()) return cmd_reproduce(cfg, repro, out);
  } catch (const qrep::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
