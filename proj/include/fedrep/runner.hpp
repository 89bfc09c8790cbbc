#pragma once

#include "fedrep/config.hpp"

namespace fedrep {

/// Result of one experiment dispatch: the assembled CSV, the manifest
/// JSON, and whether every enabled theorem check held.
struct RunOutput {
  std::string csv;
  std::string manifest_json;
  bool checks_pass = true;
};

/// Dispatches the fedrep / fullmeas / baseline / newclient commands,
/// running `replicates` runs at seeds seed + i * seed_stride and
/// assembling the aggregate CSV. Pure function of the config (plus the
/// thread-count environment override); no file I/O.
RunOutput run_experiment(const ExperimentConfig& config);

/// Writes config.out and config.out + ".manifest.json" atomically.
void write_run_output(const ExperimentConfig& config, const RunOutput& output);

/// Emits a small self-contained Python recipe that plots the CSV.
std::string plot_script_for(const ExperimentConfig& config);

}  // namespace fedrep
