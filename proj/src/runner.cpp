#include "fedrep/runner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fedrep/baselines.hpp"
#include "fedrep/trace_io.hpp"

namespace fedrep {
namespace {

constexpr char kToolVersion[] = "fedrep-lab 1.0.0";

std::vector<std::uint64_t> replicate_seeds(const ExperimentConfig& config) {
  std::vector<std::uint64_t> seeds;
  for (Index i = 0; i < std::max<Index>(1, config.replicates); ++i) {
    seeds.push_back(config.seed + i * config.seed_stride);
  }
  return seeds;
}

bool fed_contraction_holds(const FedTrace& trace) {
  for (Index t = 0; t + 1 < trace.rounds.size(); ++t) {
    const double before = trace.rounds[t].dist;
    const double after = trace.rounds[t + 1].dist;
    if (before <= kConvergenceFloor || after <= kConvergenceFloor) continue;
    if (after > (trace.rate_bound + 1e-6) * before) return false;
  }
  return true;
}

bool fullmeas_theorem_holds(const FullMeasTrace& trace) {
  const auto& rounds = trace.rounds;
  const double cap =
      2.0 * trace.sigma_max_r0 * trace.sigma_max_r0 + 1e-8;
  for (Index t = 0; t < rounds.size(); ++t) {
    if (t > 0) {
      if (rounds[t].r_recursion_err > 1e-9) return false;
      if (rounds[t].sigma_min_r < rounds[t - 1].sigma_min_r - 1e-10) return false;
      if (rounds[t].sigma_max_r < rounds[t - 1].sigma_max_r - 1e-10) return false;
      if (rounds[t].dist > trace.rate_bound * rounds[t - 1].dist + 1e-9) {
        return false;
      }
    }
    if (rounds[t].sigma_max_r * rounds[t].sigma_max_r > cap) return false;
  }
  return trace.final_loss() <=
         trace.loss_bound(rounds.size() - 1) * 1.05 + 1e-12;
}

struct DispatchResult {
  std::string csv;
  nlohmann::json checks;
  bool checks_pass = true;
};

DispatchResult dispatch_fedrep(const ExperimentConfig& config) {
  DispatchResult out;
  std::vector<FedTrace> traces;
  const std::vector<std::uint64_t> seeds = replicate_seeds(config);
  bool contraction_ok = true;
  for (const std::uint64_t seed : seeds) {
    const GroundTruth gt = generate_ground_truth(config.n, config.d, config.k, seed);
    FedConfig fc = config.fed_config();
    fc.seed = seed;
    traces.push_back(run_fedrep(gt, fc));
    contraction_ok = contraction_ok && fed_contraction_holds(traces.back());
  }
  out.csv = fedrep_trace_csv(traces, seeds);
  if (config.check_theorem) {
    out.checks["contraction_bound"] = contraction_ok;
    out.checks_pass = contraction_ok;
  }
  return out;
}

DispatchResult dispatch_fullmeas(const ExperimentConfig& config) {
  DispatchResult out;
  std::vector<FullMeasTrace> traces;
  const std::vector<std::uint64_t> seeds = replicate_seeds(config);
  bool theorem_ok = true;
  for (const std::uint64_t seed : seeds) {
    const FullMeasProblem problem = make_fullmeas_problem(
        config.n, config.d, config.k, seed, config.sigma_lo, config.sigma_hi);
    const Matrix v0 = default_v0(problem, seed);
    const double eta = config.eta > 0.0
                           ? config.eta
                           : theorem_step_size(problem, qr_decompose(v0).r);
    traces.push_back(run_fullmeas(problem, v0, eta, config.rounds));
    theorem_ok = theorem_ok && fullmeas_theorem_holds(traces.back());
  }
  out.csv = fullmeas_trace_csv(traces, seeds);
  if (config.check_theorem) {
    out.checks["fullmeas_theorem"] = theorem_ok;
    out.checks_pass = theorem_ok;
  }
  return out;
}

// Local-only training curve: clients accumulate one fresh batch per round;
// rows are emitted at power-of-two checkpoints (min-norm refits are the
// dominant cost).
FedTrace local_only_trace(const GroundTruth& gt, const ExperimentConfig& config,
                          std::uint64_t seed) {
  FedTrace trace;
  std::vector<std::vector<SampleBatch>> history(gt.n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Index t = 0; t < config.rounds; ++t) {
    for (Index i = 0; i < gt.n; ++i) {
      history[i].push_back(
          sample_batch(gt, i, config.m, config.noise_var, seed, t));
    }
    const bool checkpoint =
        (t & (t + 1)) == 0 || t + 1 == config.rounds;  // t = 2^j - 1 or last
    if (!checkpoint) continue;
    double pop = 0.0, emp = 0.0;
    for (Index i = 0; i < gt.n; ++i) {
      const Vector theta = local_only_fit(history[i]);
      const Vector target = gt.client_regressor(i);
      double diff_sq = 0.0;
      for (Index j = 0; j < gt.d; ++j) {
        const double diff = theta[j] - target[j];
        diff_sq += diff * diff;
      }
      pop += 0.5 * diff_sq;
      double residual_sq = 0.0;
      Index count = 0;
      for (const SampleBatch& batch : history[i]) {
        const Vector fit = matvec(batch.x, theta);
        for (Index j = 0; j < fit.size(); ++j) {
          const double res = fit[j] - batch.y[j];
          residual_sq += res * res;
          ++count;
        }
      }
      emp += 0.5 * residual_sq / static_cast<double>(count);
    }
    FedRound rec;
    rec.round = t;
    rec.dist = nan;
    rec.pop_loss = pop / static_cast<double>(gt.n);
    rec.emp_loss = emp / static_cast<double>(gt.n);
    rec.sigma_min_sub = nan;
    rec.sigma_max_sub = nan;
    rec.rate_bound = nan;
    rec.f_norm = nan;
    rec.participants = gt.n;
    trace.rounds.push_back(rec);
  }
  return trace;
}

FedTrace global_model_trace(const GroundTruth& gt) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  FedTrace trace;
  FedRound rec;
  rec.round = 0;
  rec.dist = nan;
  rec.pop_loss = global_model_error(gt);
  rec.emp_loss = nan;
  rec.sigma_min_sub = nan;
  rec.sigma_max_sub = nan;
  rec.rate_bound = nan;
  rec.f_norm = nan;
  rec.participants = gt.n;
  trace.rounds.push_back(rec);
  return trace;
}

DispatchResult dispatch_baseline(const ExperimentConfig& config) {
  DispatchResult out;
  std::vector<FedTrace> traces;
  const std::vector<std::uint64_t> seeds = replicate_seeds(config);
  for (const std::uint64_t seed : seeds) {
    const GroundTruth gt =
        generate_ground_truth(config.n, config.d, config.k, seed);
    FedConfig fc = config.fed_config();
    fc.seed = seed;
    if (config.algo == "gdgd") {
      traces.push_back(run_gdgd(gt, fc, config.tau, config.alpha));
    } else if (config.algo == "10gd") {
      traces.push_back(run_gdgd(gt, fc, 10, config.alpha));
    } else if (config.algo == "local") {
      traces.push_back(local_only_trace(gt, config, seed));
    } else if (config.algo == "global") {
      traces.push_back(global_model_trace(gt));
    } else {
      traces.push_back(run_fedrep(gt, fc));
    }
  }
  out.csv = fedrep_trace_csv(traces, seeds, config.algo);
  return out;
}

DispatchResult dispatch_newclient(const ExperimentConfig& config) {
  DispatchResult out;
  std::vector<NewClientReport> reports;
  const std::vector<std::uint64_t> seeds = replicate_seeds(config);
  for (const std::uint64_t seed : seeds) {
    const GroundTruth gt =
        generate_ground_truth(config.n, config.d, config.k, seed);
    FedConfig fc = config.fed_config();
    fc.seed = seed;
    const FedTrace trace = config.algo == "gdgd"
                               ? run_gdgd(gt, fc, config.tau, config.alpha)
                               : run_fedrep(gt, fc);
    reports.push_back(new_client_eval(trace.final_b, gt, config.m_new,
                                      config.noise_var, seed,
                                      config.test_size));
  }
  out.csv = new_client_csv(reports, seeds);
  return out;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  DispatchResult result;
  if (config.command == "fedrep") {
    result = dispatch_fedrep(config);
  } else if (config.command == "fullmeas") {
    result = dispatch_fullmeas(config);
  } else if (config.command == "baseline") {
    result = dispatch_baseline(config);
  } else if (config.command == "newclient") {
    result = dispatch_newclient(config);
  } else {
    throw ConfigError("run_experiment: unsupported command '" +
                      config.command + "'");
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;

  nlohmann::json manifest;
  manifest["schema_version"] = kCsvSchemaVersion;
  manifest["tool"] = kToolVersion;
  manifest["command"] = config.command;
  manifest["config"] = config.serialize();
  manifest["wall_time_ms"] =
      std::chrono::duration<double, std::milli>(elapsed).count();
  manifest["checks"] = result.checks;
  manifest["checks_pass"] = result.checks_pass;
  manifest["csv_path"] = config.out;

  RunOutput out;
  out.csv = std::move(result.csv);
  out.manifest_json = manifest.dump(2) + "\n";
  out.checks_pass = result.checks_pass;
  return out;
}

void write_run_output(const ExperimentConfig& config, const RunOutput& output) {
  write_file_atomic(config.out, output.csv);
  write_file_atomic(config.out + ".manifest.json", output.manifest_json);
}

std::string plot_script_for(const ExperimentConfig& config) {
  std::ostringstream py;
  py << "#!/usr/bin/env python3\n"
     << "\"\"\"Plot a fedrep-lab trace CSV (blocks per replicate).\"\"\"\n"
     << "import csv, sys\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "path = sys.argv[1] if len(sys.argv) > 1 else "
     << "\"" << config.out << "\"\n"
     << "blocks, header = [], None\n"
     << "with open(path) as fh:\n"
     << "    for row in csv.reader(fh):\n"
     << "        if not row or row[0] in ('schema_version', 'kind'):\n"
     << "            continue\n"
     << "        if row[0] == 'replicate':\n"
     << "            blocks.append([])\n"
     << "            header = None\n"
     << "            continue\n"
     << "        if row[0] == 'summary':\n"
     << "            break\n"
     << "        if header is None:\n"
     << "            header = row\n"
     << "            continue\n"
     << "        blocks[-1].append(dict(zip(header, row)))\n\n"
     << "metric = 'dist' if 'dist' in (header or []) else 'loss'\n"
     << "for i, rows in enumerate(blocks):\n"
     << "    xs = [int(r['round']) for r in rows if r.get(metric, 'nan') != 'nan']\n"
     << "    ys = [float(r[metric]) for r in rows if r.get(metric, 'nan') != 'nan']\n"
     << "    plt.semilogy(xs, ys, label=f'replicate {i}')\n"
     << "plt.xlabel('round')\n"
     << "plt.ylabel(metric)\n"
     << "plt.legend()\n"
     << "plt.tight_layout()\n"
     << "plt.savefig(path + '.png', dpi=150)\n"
     << "print('wrote', path + '.png')\n";
  return py.str();
}

}  // namespace fedrep
