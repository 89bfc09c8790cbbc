// fedrep_lab — command-line front end for the federated representation
// learning laboratory. Subcommands mirror the engines: `fedrep` runs the
// alternating minimization-descent federation, `fullmeas` the
// full-measurement factorization, `baseline` the comparison methods,
// `newclient` the transfer evaluation, and `verify` the built-in
// verification battery.

#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "fedrep/runner.hpp"
#include "fedrep/trace_io.hpp"
#include "fedrep/verify.hpp"

namespace {

struct CliState {
  std::string config_path;
  std::string plot_script_path;
  std::vector<std::pair<std::string, std::string>> assignments;
};

void add_common_options(CLI::App* sub, CliState& state) {
  sub->add_option("--config", state.config_path,
                  "config file (key = value lines); flags override it");
  sub->add_option("--plot-script", state.plot_script_path,
                  "also write a Python plotting recipe to this path");

  const auto add_kv = [sub, &state](const std::string& flag,
                                    const std::string& key,
                                    const std::string& desc) {
    sub->add_option_function<std::string>(
        flag,
        [&state, key](const std::string& value) {
          state.assignments.emplace_back(key, value);
        },
        desc);
  };
  add_kv("--out", "out", "output CSV path (manifest lands next to it)");
  add_kv("--seed", "seed", "base seed");
  add_kv("--replicates", "replicates", "replicate count");
  add_kv("--seed-stride", "seed_stride", "seed increment between replicates");
  add_kv("--n", "n", "number of clients (or target rows)");
  add_kv("--d", "d", "ambient dimension (or target columns)");
  add_kv("--k", "k", "representation dimension / rank");
  add_kv("--m", "m", "samples per client per round");
  add_kv("--r", "r", "participation rate in (0, 1]");
  add_kv("--eta", "eta", "representation step size (0 = theorem default)");
  add_kv("--rounds", "rounds", "communication rounds");
  add_kv("--noise-var", "noise_var", "label noise variance");
  add_kv("--ortho", "ortho", "orthonormalize after aggregation {on,off}");
  add_kv("--data-mode", "data_mode", "batch reuse {fresh,fixed}");
  add_kv("--grad-mode", "grad_mode", "gradients {empirical,population}");
  add_kv("--init", "init", "representation init {random,spectral}");
  add_kv("--init-steps", "init_steps", "projected-gradient steps for spectral init");
  add_kv("--algo", "algo", "baseline {fedrep,gdgd,10gd,local,global}");
  add_kv("--tau", "tau", "head gradient steps for algo=gdgd");
  add_kv("--alpha", "alpha", "head step size (negative = 1/L from the batch Gram)");
  add_kv("--m-new", "m_new", "samples for the new client's head");
  add_kv("--test-size", "test_size", "held-out test samples per evaluation");
  add_kv("--sigma-lo", "sigma_lo", "smallest planted singular value (fullmeas)");
  add_kv("--sigma-hi", "sigma_hi", "largest planted singular value (fullmeas)");
  add_kv("--threads", "threads", "worker cap (0 = FEDREP_LAB_THREADS)");
  sub->add_flag_callback(
      "--check-theorem",
      [&state] { state.assignments.emplace_back("check_theorem", "on"); },
      "record theorem-bound pass/fail flags in the manifest");
}

int run_verify() {
  const std::vector<fedrep::CheckResult> results =
      fedrep::run_verification_battery();
  std::cout << fedrep::render_check_table(results);
  int failures = 0;
  for (const fedrep::CheckResult& r : results) failures += r.pass ? 0 : 1;
  return failures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated shared-representation learning laboratory"};
  app.require_subcommand(1);

  CliState state;
  const std::pair<const char*, const char*> commands[] = {
      {"fedrep", "alternating minimization-descent federation"},
      {"fullmeas", "full-measurement matrix factorization"},
      {"baseline", "comparison methods (gdgd, 10gd, local, global)"},
      {"newclient", "train, then evaluate transfer to a fresh client"},
  };
  for (const auto& [name, description] : commands) {
    add_common_options(app.add_subcommand(name, description), state);
  }
  app.add_subcommand("verify", "run the verification battery");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "verify") return run_verify();

    fedrep::ExperimentConfig config;
    if (!state.config_path.empty()) {
      config = fedrep::parse_config_file(state.config_path);
    }
    for (const auto& [key, value] : state.assignments) {
      fedrep::apply_config_key(config, key, value);
    }
    config.command = command;

    const fedrep::RunOutput output = fedrep::run_experiment(config);
    fedrep::write_run_output(config, output);
    std::cout << "wrote " << config.out << " and " << config.out
              << ".manifest.json\n";
    if (!state.plot_script_path.empty()) {
      fedrep::write_file_atomic(state.plot_script_path,
                                fedrep::plot_script_for(config));
      std::cout << "wrote " << state.plot_script_path << "\n";
    }
    if (!output.checks_pass) {
      std::cerr << "enabled theorem checks FAILED (see manifest)\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
