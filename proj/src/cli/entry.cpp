#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <map>

#include "adalang/cli.hpp"
#include "adalang/errors.hpp"

namespace adalang::cli {

int main_entry(int argc, char** argv) {
  CLI::App app{"Adaptive-stepsize Langevin samplers and experiments"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::int64_t n = 0;
  double mu_true = 0.0;

  struct Sub {
    const char* name;
    Experiment exp;
    const char* help;
  };
  const Sub subs[] = {
      {"sample", Experiment::sample, "run one ensemble; write histogram.csv and report.csv"},
      {"sweep", Experiment::sweep, "weak-error sweep over h; write convergence.csv and slopes.csv"},
      {"escape", Experiment::escape, "escape fractions over h; write escape.csv"},
      {"two-pathway", Experiment::two_pathway, "channel occupancy runs; write trajectory.csv and occupancy.csv"},
      {"bayes-gen", Experiment::bayes_gen, "synthetic data for the Bayesian example; write data.csv"},
      {"audit", Experiment::audit, "monitor criteria and stationarity audits; write audit.csv"},
  };
  std::map<CLI::App*, Experiment> lookup;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    auto* opt = sub->add_option("--config,-c", config_path, "experiment config (INI)");
    if (s.exp != Experiment::bayes_gen) opt->required();
    sub->add_option("--out,-o", out, "output directory (overrides config and ADALANG_OUT_DIR)");
    sub->add_option("--seed", seed, "override sampler.seed");
    sub->add_option("--threads", threads, "worker threads");
    if (s.exp == Experiment::bayes_gen) {
      sub->add_option("--n", n, "number of draws");
      sub->add_option("--mu-true", mu_true, "mean of the generating normal");
    }
    lookup[sub] = s.exp;
  }
  CLI::App* print = app.add_subcommand("print-config", "parse a config and print its canonical form");
  print->add_option("--config,-c", config_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (print->parsed()) {
      std::cout << serialize_config(load_config(config_path));
      return kOk;
    }
    CLI::App* sub = app.get_subcommands().front();
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    cfg.experiment = lookup.at(sub);
    if (const char* env = std::getenv("ADALANG_OUT_DIR"); env && *env) cfg.out = env;
    if (sub->count("--out")) cfg.out = out;
    if (sub->count("--seed")) cfg.sampler.seed = seed;
    if (sub->count("--threads")) cfg.run.threads = threads;
    if (cfg.experiment == Experiment::bayes_gen) {
      if (sub->count("--n")) cfg.run.n = n;
      if (sub->count("--mu-true")) cfg.run.mu_true = mu_true;
    }
    cfg.validate();
    return run_experiment(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const AuditFailure& e) {
    std::cerr << "audit failure: " << e.what() << '\n';
    return kCriterion;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace adalang::cli
