#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adalang/core.hpp"
#include "adalang/monitor.hpp"
#include "adalang/potentials.hpp"

namespace adalang::cli {

enum class Experiment { sample, sweep, escape, audit, two_pathway, bayes_gen };

[[nodiscard]] std::string to_string(Experiment e);
[[nodiscard]] Experiment parse_experiment(const std::string& s);

struct PotentialSpec {
  std::string id = "modified_harmonic";  // modified_harmonic | harmonic | bayes | two_pathway
  ModifiedHarmonicParams mh;
  double k = 1.0;   // harmonic stiffness
  int dim = 1;      // harmonic dimension
  int K = 4;        // bayes prior exponent
  double a = 2.0;   // bayes prior centre
  std::vector<double> y;   // bayes data, inline
  std::string data_file;   // bayes data, one value per row after a header
  TwoPathwayParams tp;
};

struct MonitorSpec {
  std::string id = "omega";  // constant | grad_norm | omega_sq | omega | channel | bayes
  MonitorParams params;
  Orientation orientation = Orientation::inverse;  // channel only
  double value = 1.0;                              // constant only
  // Frequency parameters for grad_norm / omega_sq / omega when they should
  // differ from the potential's (or the potential is not modified_harmonic).
  std::optional<ModifiedHarmonicParams> mh;
};

struct InitSpec {
  std::vector<double> mean;   // empty: potential centre
  double std = -1.0;          // < 0: sqrt(beta_inv)
};

struct RunSpec {
  unsigned threads = 1;
  int k_max = 4;
  int bins = 200;
  double support_lo = -6.0;
  double support_hi = 6.0;
  int slope_k = 2;
  std::int64_t stride = 10;
  double upper_threshold = 0.01;
  double lower_threshold = 1.0;
  double small_h = 0.005;
  double small_t_final = 0.0;  // 0: same as sampler.t_final
  std::int64_t n = 10;         // bayes-gen sample count
  double mu_true = 1.7;
  std::vector<double> audit_lo{-2.0};
  std::vector<double> audit_hi{3.0};
  int n_grid = 201;
  double spacing = 1e-3;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::sample;
  std::string out = ".";
  std::vector<std::string> schemes{"EM_IP"};
  std::vector<double> h_list;
  PotentialSpec potential;
  MonitorSpec monitor;
  SamplerConfig sampler;
  InitSpec init;
  RunSpec run;

  /// Throws ValidationError naming the section and key.
  void validate() const;
};

/// Parses the INI grammar: `[section]` headers, `key = value` lines, `;` or
/// `#` comments, lists comma separated. Sections: experiment, potential,
/// monitor, sampler, init, run. Unknown sections or keys are errors.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);
/// Canonical form: fixed section and key order, floats at 17 significant
/// digits, only keys relevant to the chosen potential and monitor.
[[nodiscard]] std::string serialize_config(const ExperimentConfig& cfg);

/// Models built from a config; the monitor references nothing in the config.
[[nodiscard]] PotentialModel build_potential(const PotentialSpec& spec);
[[nodiscard]] MonitorFunction build_monitor(const MonitorSpec& spec, const PotentialSpec& pot);
[[nodiscard]] std::vector<double> bayes_data(const PotentialSpec& spec);

enum ExitCode : int { kOk = 0, kValidation = 1, kCriterion = 2, kNumerical = 3, kNoFit = 4 };

// Each command writes its files under cfg.out and returns an exit code.
int cmd_sample(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);
int cmd_escape(const ExperimentConfig& cfg);
int cmd_two_pathway(const ExperimentConfig& cfg);
int cmd_bayes_gen(const ExperimentConfig& cfg);
int cmd_audit(const ExperimentConfig& cfg);

int run_experiment(const ExperimentConfig& cfg);

/// Entry point used by the executable.
int main_entry(int argc, char** argv);

}  // namespace adalang::cli
