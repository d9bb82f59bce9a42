#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clipvrg/experiment.hpp"

namespace {

int exit_code(clipvrg::Errc e) {
  using clipvrg::Errc;
  switch (e) {
    case Errc::numerical_failure:
    case Errc::invalid_state:
    case Errc::attack_output_invalid: return 3;
    case Errc::io_error: return 4;
    default: return 2;
  }
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

clipvrg::ExperimentConfig load(const Common& c) {
  auto cfg = clipvrg::load_config(c.config);
  if (c.seed) cfg.master_seed = *c.seed;
  return cfg;
}

int cmd_validate(const Common& c) {
  const auto d = clipvrg::validate_config(load(c));
  clipvrg::print_diagnostics(std::cout, d);
  std::cout << (d.ok() ? "config OK" : "config INVALID") << '\n';
  return d.ok() ? 0 : 2;
}

int cmd_run(const Common& c) {
  const auto cfg = load(c);
  clipvrg::Experiment e = clipvrg::build_experiment(cfg);
  const auto d = clipvrg::validate_experiment(e);
  if (!d.ok()) {
    clipvrg::print_diagnostics(std::cerr, d);
    std::cerr << "config INVALID\n";
    return 2;
  }
  const std::string out = c.out.empty() ? cfg.output : c.out;
  const auto report = clipvrg::run_built_experiment(e, {c.threads, out});
  clipvrg::print_summary(std::cout, report);
  std::cout << "wrote " << report.rows.size() << " rows to " << out << '\n';
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<std::string>& values) {
  const auto cfg = load(c);
  const std::string dir = c.out.empty() ? "sweep" : c.out;
  const auto entries = clipvrg::sweep(cfg, clipvrg::parse_sweep_parameter(param), values, dir, c.threads);
  clipvrg::write_sweep_table(std::cout, entries);
  return 0;
}

int cmd_demo(std::size_t m, std::size_t rounds, const std::string& variant, unsigned threads) {
  using clipvrg::DemoVariant;
  DemoVariant v = DemoVariant::half_attacked;
  if (variant == "control")
    v = DemoVariant::honest_control;
  else if (variant == "all-attacked")
    v = DemoVariant::all_attacked;
  else if (variant != "attacked")
    clipvrg::fail(clipvrg::Errc::invalid_argument, "variant must be attacked, control or all-attacked");
  const auto s = clipvrg::run_tightness_demo(m, rounds, v, threads);
  std::cout << "agents: " << s.agents << "  attacked: " << s.attacked << "  kappa: " << s.kappa
            << "  rho: " << s.rho << "  1/(1+kappa): " << s.rho_bound << '\n'
            << "final network average: " << clipvrg::fmt(s.final_mean, 10) << '\n'
            << "final max deviation from average: " << clipvrg::fmt(s.final_spread, 6) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed stochastic optimization with clipping under gradient attacks"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", common.config, "experiment JSON");
    if (needs_config) opt->required();
    sub->add_option("--seed", common.seed, "override master_seed");
    sub->add_option("--threads", common.threads, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
  };

  auto* validate = app.add_subcommand("validate", "check a config against the model assumptions");
  add_common(validate, true);

  auto* run = app.add_subcommand("run", "run an experiment and write its metrics CSV");
  add_common(run, true);
  run->add_option("--out", common.out, "CSV path (default: config 'output')");

  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "run one experiment per parameter value");
  add_common(sweep, true);
  sweep->add_option("--out", common.out, "output directory");
  sweep->add_option("--param", param, "attack_count, noise_std, tau_alpha, tau_gamma or seed")->required();
  sweep->add_option("--values", values, "comma separated values; tau pairs as a:b")
      ->required()
      ->delimiter(',');

  std::size_t m = 5, rounds = 100000;
  std::string variant = "attacked";
  auto* demo = app.add_subcommand("tightness-demo", "half the agents pull toward 1, half toward 0");
  demo->add_option("--m", m, "agents per side")->check(CLI::PositiveNumber);
  demo->add_option("--rounds", rounds, "rounds");
  demo->add_option("--variant", variant, "attacked, control or all-attacked");
  demo->add_option("--threads", common.threads)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(common);
    if (*run) return cmd_run(common);
    if (*sweep) return cmd_sweep(common, param, values);
    if (*demo) return cmd_demo(m, rounds, variant, common.threads);
  } catch (const clipvrg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
