#pragma once

#include <cstdint>
#include <string>

#include "fedrep/fedrep.hpp"

namespace fedrep {

/// Flat experiment description: the union of engine parameters, baseline
/// selection, and output policy. Every field has a default, and the
/// key=value serialization parses back to an identical value.
struct ExperimentConfig {
  std::string command = "fedrep";  // fedrep | fullmeas | baseline |
                                   // newclient | verify
  Index n = 100;
  Index d = 10;
  Index k = 2;
  Index m = 5;
  double r = 0.1;
  double eta = 0.0;  // <= 0: engine picks the theorem default
  Index rounds = 100;
  std::uint64_t seed = 1;
  double noise_var = 1e-3;
  bool ortho = false;
  std::string data_mode = "fresh";      // fresh | fixed
  std::string grad_mode = "empirical";  // empirical | population
  std::string init = "random";          // random | spectral
  Index init_steps = 10;
  std::string algo = "fedrep";  // fedrep | gdgd | 10gd | local | global
  Index tau = 1;                // head steps for algo=gdgd
  double alpha = -1.0;          // head step size; negative picks 1/L per batch
  Index replicates = 1;
  std::uint64_t seed_stride = 1;
  std::string out = "trace.csv";
  Index m_new = 2;
  Index test_size = 10000;
  bool check_theorem = false;
  double sigma_lo = 1.0;  // singular-value range for planted fullmeas runs
  double sigma_hi = 2.0;
  unsigned threads = 0;  // 0: FEDREP_LAB_THREADS env var

  bool operator==(const ExperimentConfig&) const = default;

  /// View of the federated-engine fields; validates enum-like strings.
  FedConfig fed_config() const;

  /// Canonical "key = value" lines covering every field.
  std::string serialize() const;
};

/// Applies one key=value assignment; throws ConfigError naming the key
/// when it is unknown or the value does not parse.
void apply_config_key(ExperimentConfig& config, const std::string& key,
                      const std::string& value);

/// Parses key = value text ('#' comments, blank lines and [section]
/// headers allowed) on top of the defaults.
ExperimentConfig parse_config_text(const std::string& text);

ExperimentConfig parse_config_file(const std::string& path);

}  // namespace fedrep
