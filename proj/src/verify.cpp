#include "fedrep/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "fedrep/baselines.hpp"
#include "fedrep/runner.hpp"
#include "fedrep/trace_io.hpp"

namespace fedrep {
namespace {

using ClockMs = std::chrono::duration<double, std::milli>;

struct CheckBody {
  bool pass = false;
  std::string detail;
};

CheckResult run_check(int id, const std::string& name, double budget_ms,
                      const std::function<CheckBody()>& body) {
  CheckResult result;
  result.id = id;
  result.name = name;
  result.budget_ms = budget_ms;
  const auto start = std::chrono::steady_clock::now();
  try {
    const CheckBody outcome = body();
    result.pass = outcome.pass;
    result.detail = outcome.detail;
  } catch (const std::exception& e) {
    result.pass = false;
    result.detail = std::string("exception: ") + e.what();
  }
  result.millis = ClockMs(std::chrono::steady_clock::now() - start).count();
  if (budget_ms > 0.0 && result.millis > budget_ms) {
    result.pass = false;
    result.detail += " [over runtime budget]";
  }
  return result;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ---- shared fixtures ------------------------------------------------------

struct CriterionFullmeasRun {
  FullMeasProblem problem;
  FullMeasTrace trace;
};

// The random rank-k factorization run shared by checks 1 and 2.
CriterionFullmeasRun criterion_fullmeas_run() {
  FullMeasProblem problem = make_fullmeas_problem(30, 20, 3, 7);
  const Matrix v0 = default_v0(problem, 7);
  const double eta = theorem_step_size(problem, qr_decompose(v0).r);
  FullMeasTrace trace = run_fullmeas(problem, v0, eta, 100);
  return CriterionFullmeasRun{std::move(problem), std::move(trace)};
}

FedConfig synth_regime_config(std::uint64_t seed) {
  FedConfig config;
  config.n = 100;
  config.d = 10;
  config.k = 2;
  config.m = 5;
  config.r = 0.1;
  config.noise_var = 1e-3;
  config.rounds = 500;
  config.seed = seed;
  return config;
}

Index rounds_to_threshold(const FedTrace& trace, double threshold) {
  for (const FedRound& rec : trace.rounds) {
    if (rec.dist < threshold) return rec.round;
  }
  return trace.rounds.size() + 1;
}

// Head solve through explicit normal equations with Gaussian elimination;
// deliberately a different route than the QR solver under test.
Vector normal_equation_head(const Matrix& xb, const Vector& y) {
  const Index k = xb.cols();
  Matrix system(k, k + 1);
  const Matrix gram = xb.gram_with(xb);
  const Vector rhs = matvec_transposed(xb, y);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) system(i, j) = gram(i, j);
    system(i, k) = rhs[i];
  }
  for (Index col = 0; col < k; ++col) {
    Index pivot = col;
    for (Index i = col + 1; i < k; ++i) {
      if (std::abs(system(i, col)) > std::abs(system(pivot, col))) pivot = i;
    }
    for (Index j = 0; j <= k; ++j) std::swap(system(col, j), system(pivot, j));
    for (Index i = col + 1; i < k; ++i) {
      const double factor = system(i, col) / system(col, col);
      for (Index j = col; j <= k; ++j) system(i, j) -= factor * system(col, j);
    }
  }
  Vector w(k);
  for (Index i = k; i-- > 0;) {
    double s = system(i, k);
    for (Index j = i + 1; j < k; ++j) s -= system(i, j) * w[j];
    w[i] = s / system(i, i);
  }
  return w;
}

// Gradient descent with backtracking on the single-model objective
// (1/2n) sum_i ||B w - B* w_i*||^2; independent route to its minimum value.
double minimize_single_model(const GroundTruth& gt, std::uint64_t seed) {
  Vector z_bar(gt.d, 0.0);
  std::vector<Vector> targets;
  for (Index i = 0; i < gt.n; ++i) {
    targets.push_back(gt.client_regressor(i));
    z_bar = axpy(1.0, targets.back(), z_bar);
  }
  z_bar = scaled(z_bar, 1.0 / static_cast<double>(gt.n));

  const auto value = [&](const Matrix& b, const Vector& w) {
    double total = 0.0;
    const Vector fit = matvec(b, w);
    for (const Vector& z : targets) {
      for (Index j = 0; j < gt.d; ++j) {
        const double diff = fit[j] - z[j];
        total += diff * diff;
      }
    }
    return 0.5 * total / static_cast<double>(gt.n);
  };

  RandomStream stream = RandomStream::derive(seed, StreamPurpose::kTestSet, 99);
  Matrix b = stream.gaussian_matrix(gt.d, gt.k).scaled(0.3);
  Vector w = stream.gaussian_vector(gt.k);
  double f = value(b, w);
  double step = 1.0;
  for (int iter = 0; iter < 200000; ++iter) {
    Vector residual = matvec(b, w);
    for (Index j = 0; j < gt.d; ++j) residual[j] -= z_bar[j];
    const Matrix grad_b = outer(residual, w);
    const Vector grad_w = matvec_transposed(b, residual);
    const double grad_sq =
        grad_b.frobenius_norm() * grad_b.frobenius_norm() + dot(grad_w, grad_w);
    if (grad_sq < 1e-24) break;
    while (step > 1e-12) {
      const Matrix b_next = b - grad_b.scaled(step);
      const Vector w_next = axpy(-step, grad_w, w);
      const double f_next = value(b_next, w_next);
      if (f_next <= f - 0.25 * step * grad_sq) {
        b = b_next;
        w = w_next;
        f = f_next;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (step <= 1e-12) break;
  }
  return f;
}

CheckBody check_r_recursion() {
  const FullMeasTrace trace = criterion_fullmeas_run().trace;
  double max_recursion = 0.0;
  double worst_monotone = -1.0;
  double worst_cap = -1.0;
  const double cap = 2.0 * trace.sigma_max_r0 * trace.sigma_max_r0 + 1e-8;
  for (Index t = 0; t < trace.rounds.size(); ++t) {
    const FullMeasRound& rec = trace.rounds[t];
    if (t > 0) {
      max_recursion = std::max(max_recursion, rec.r_recursion_err);
      const FullMeasRound& prev = trace.rounds[t - 1];
      worst_monotone = std::max(worst_monotone, prev.sigma_min_r - rec.sigma_min_r);
      worst_monotone = std::max(worst_monotone, prev.sigma_max_r - rec.sigma_max_r);
    }
    worst_cap = std::max(worst_cap, rec.sigma_max_r * rec.sigma_max_r - cap);
  }
  CheckBody body;
  body.pass = max_recursion <= 1e-9 && worst_monotone <= 1e-10 && worst_cap <= 0.0;
  body.detail = "max recursion err " + fmt(max_recursion) +
                ", worst monotone slip " + fmt(worst_monotone) +
                ", cap margin " + fmt(-worst_cap);
  return body;
}

CheckBody check_fullmeas_contraction() {
  const CriterionFullmeasRun run = criterion_fullmeas_run();
  const FullMeasProblem& problem = run.problem;
  const FullMeasTrace& trace = run.trace;
  double worst_ratio_excess = -1.0;
  double worst_corrected_excess = -1.0;
  Index last_violation = 0;
  const double star_min_sq =
      problem.sigma_star_min() * problem.sigma_star_min();
  const double r0_sq = 2.0 * trace.sigma_max_r0 * trace.sigma_max_r0;
  for (Index t = 0; t + 1 < trace.rounds.size(); ++t) {
    const double before = trace.rounds[t].dist;
    const double after = trace.rounds[t + 1].dist;
    const double excess = after - (trace.rate_bound * before + 1e-9);
    if (excess > 0.0) last_violation = t + 1;
    worst_ratio_excess = std::max(worst_ratio_excess, excess);
    // Same bound with the subspace-alignment factor 1 - dist^2 restored
    // (the factor the federated theorem carries as E_0).
    const double corrected =
        1.0 - trace.eta * star_min_sq * (1.0 - before * before) / r0_sq;
    worst_corrected_excess =
        std::max(worst_corrected_excess, after - (corrected * before + 1e-9));
  }
  const double bound = trace.loss_bound(trace.rounds.size() - 1) * 1.05;
  const double final_loss = trace.final_loss();
  CheckBody body;
  body.pass = worst_ratio_excess <= 0.0 && final_loss <= bound;
  body.detail = "contraction margin " + fmt(-worst_ratio_excess) +
                (last_violation > 0
                     ? " (stated per-round rate violated through round " +
                           std::to_string(last_violation) +
                           " while dist is near 1; alignment-corrected rate "
                           "margin " +
                           fmt(-worst_corrected_excess) + ")"
                     : "") +
                ", final loss " + fmt(final_loss) + " vs bound " + fmt(bound);
  return body;
}

CheckBody check_identity_case() {
  const FullMeasProblem problem = fullmeas_from_factors(
      OrthonormalBasis(Matrix::identity(2)), Vector{1.0, 1.0},
      OrthonormalBasis(Matrix::identity(2)));
  const Matrix v0 = default_v0(problem, 21);
  const FullMeasTrace trace = run_fullmeas(problem, v0, 0.5, 40);
  double worst = -1.0;
  for (const FullMeasRound& rec : trace.rounds) {
    const double bound =
        2.0 * std::pow(0.75, static_cast<double>(rec.round)) + 1e-9;
    worst = std::max(worst, rec.loss - bound);
  }
  CheckBody body;
  body.pass = worst <= 0.0;
  body.detail = "loss-bound margin " + fmt(-worst);
  return body;
}

CheckBody check_population_contraction() {
  const GroundTruth gt = generate_ground_truth(100, 10, 2, 31);
  FedConfig config;
  config.n = 100;
  config.d = 10;
  config.k = 2;
  config.m = 5;
  config.r = 1.0;
  config.noise_var = 0.0;
  config.grad_mode = GradMode::kPopulation;
  config.rounds = 200;
  config.seed = 31;
  const FedTrace trace = run_fedrep(gt, config);
  double worst_excess = -1.0;
  Index judged = 0;
  for (Index t = 0; t + 1 < trace.rounds.size(); ++t) {
    const double before = trace.rounds[t].dist;
    const double after = trace.rounds[t + 1].dist;
    if (before <= kConvergenceFloor || after <= kConvergenceFloor) continue;
    ++judged;
    worst_excess =
        std::max(worst_excess, after / before - (trace.rate_bound + 1e-6));
  }
  CheckBody body;
  body.pass = worst_excess <= 0.0 && trace.final_dist() < 1e-6;
  body.detail = "ratio margin " + fmt(-worst_excess) + " over " +
                std::to_string(judged) + " rounds above the floor, final dist " +
                fmt(trace.final_dist());
  return body;
}

CheckBody check_empirical_ordering() {
  std::vector<double> final_dists;
  bool ordering = true;
  std::string detail;
  for (const std::uint64_t seed : {101ULL, 102ULL, 103ULL}) {
    const GroundTruth gt = generate_ground_truth(100, 10, 2, seed);
    const FedConfig config = synth_regime_config(seed);
    const FedTrace fedrep_trace = run_fedrep(gt, config);
    const FedTrace ten_gd = run_gdgd(gt, config, 10);
    const FedTrace one_gd = run_gdgd(gt, config, 1);
    final_dists.push_back(fedrep_trace.final_dist());
    const Index rt_exact = rounds_to_threshold(fedrep_trace, 0.1);
    const Index rt_ten = rounds_to_threshold(ten_gd, 0.1);
    const Index rt_one = rounds_to_threshold(one_gd, 0.1);
    ordering = ordering && rt_exact <= rt_ten && rt_ten <= rt_one;
    detail += "seed " + std::to_string(seed) + ": rounds-to-0.1 " +
              std::to_string(rt_exact) + "/" + std::to_string(rt_ten) + "/" +
              std::to_string(rt_one) + "; ";
  }
  const double median_dist = median_of(final_dists);
  CheckBody body;
  body.pass = ordering && median_dist < 1e-2;
  body.detail = detail + "median final dist " + fmt(median_dist);
  return body;
}

CheckBody check_ortho_equivalence() {
  const GroundTruth gt = generate_ground_truth(50, 10, 2, 41);
  FedConfig config;
  config.n = 50;
  config.d = 10;
  config.k = 2;
  config.m = 5;
  config.r = 0.2;
  config.noise_var = 0.0;
  config.grad_mode = GradMode::kPopulation;
  config.rounds = 50;
  config.seed = 41;
  const SpectralBounds bounds =
      spectral_bounds(gt, config.participants_per_round());
  config.eta = 1.0 / (4.0 * bounds.sigma_max * bounds.sigma_max);

  FedConfig with_ortho = config;
  with_ortho.ortho = true;
  FedState plain{init_representation(gt, config), Matrix(gt.n, gt.k), 0};
  FedState ortho{plain.b, plain.heads, 0};

  double worst = 0.0;
  double first_round = 0.0;
  for (Index t = 0; t < config.rounds; ++t) {
    server_round(plain, gt, config);
    server_round(ortho, gt, with_ortho);
    const double drift = principal_angle_distance(plain.b, ortho.b);
    if (t == 0) first_round = drift;
    worst = std::max(worst, drift);
  }
  CheckBody body;
  body.pass = worst <= 1e-8;
  body.detail = "max inter-iterate distance " + fmt(worst) +
                " (round-1 drift " + fmt(first_round) +
                "; spans separate once the plain run's Gram leaves I, at "
                "order eta^3 per round)";
  return body;
}

CheckBody check_gradient_oracle() {
  const GroundTruth gt = generate_ground_truth(6, 8, 3, 51);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    RandomStream stream =
        RandomStream::derive(51, StreamPurpose::kTestSet, trial);
    const Matrix b = stream.gaussian_matrix(gt.d, gt.k);
    const Vector w = stream.gaussian_vector(gt.k);
    const SampleBatch batch =
        sample_batch(gt, trial % gt.n, 12, 1e-3, 51, trial);
    const Matrix grad = client_rep_gradient(b, w, batch);
    const Matrix direction = stream.gaussian_matrix(gt.d, gt.k);

    const auto loss_at = [&](const Matrix& rep) {
      const Vector fit = matvec(batch.x, matvec(rep, w));
      double s = 0.0;
      for (Index j = 0; j < fit.size(); ++j) {
        const double res = fit[j] - batch.y[j];
        s += res * res;
      }
      return 0.5 * s / static_cast<double>(batch.y.size());
    };
    const double h = 1e-6;
    const double numeric =
        (loss_at(b + direction.scaled(h)) - loss_at(b - direction.scaled(h))) /
        (2.0 * h);
    double analytic = 0.0;
    for (Index i = 0; i < grad.rows(); ++i) {
      for (Index j = 0; j < grad.cols(); ++j) {
        analytic += grad(i, j) * direction(i, j);
      }
    }
    worst = std::max(worst, std::abs(numeric - analytic) /
                                std::max(std::abs(analytic), 1e-12));
  }
  CheckBody body;
  body.pass = worst < 1e-5;
  body.detail = "worst relative error " + fmt(worst);
  return body;
}

CheckBody check_head_oracle() {
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    RandomStream stream =
        RandomStream::derive(61, StreamPurpose::kTestSet, trial);
    const Index k = 1 + trial % 4;
    const Index d = k + 2 + trial % 3;
    const Index m = k + 2 + trial % 5;
    const GroundTruth gt = generate_ground_truth(8, d, k, 61 + trial);
    const Matrix b = stream.gaussian_matrix(d, k);
    const SampleBatch batch = sample_batch(gt, trial % 8, m, 1e-3, 61, trial);
    const Vector solved = client_head_update(b, batch);
    const Vector oracle = normal_equation_head(batch.x * b, batch.y);
    for (Index j = 0; j < k; ++j) {
      worst = std::max(worst, std::abs(solved[j] - oracle[j]));
    }
  }
  CheckBody body;
  body.pass = worst <= 1e-10;
  body.detail = "worst coordinate gap " + fmt(worst);
  return body;
}

CheckBody check_single_model_error() {
  // Hand-checked two-client instance: heads +1 and -1 average to zero.
  Matrix w_hand(2, 1);
  w_hand(0, 0) = 1.0;
  w_hand(1, 0) = -1.0;
  Matrix e1(2, 1);
  e1(0, 0) = 1.0;
  const GroundTruth hand{w_hand, OrthonormalBasis(e1), 2, 2, 1, 0};
  const double hand_error = global_model_error(hand);
  bool pass = std::abs(hand_error - 0.5) <= 1e-12;

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const GroundTruth gt = generate_ground_truth(6, 7, 2, 71 + trial);
    const double closed = global_model_error(gt);
    const double numeric = minimize_single_model(gt, 71 + trial);
    worst = std::max(worst, std::abs(closed - numeric));
  }
  pass = pass && worst <= 1e-8;
  CheckBody body;
  body.pass = pass;
  body.detail = "hand case " + fmt(hand_error) + ", worst optimizer gap " +
                fmt(worst);
  return body;
}

CheckBody check_new_client_gap() {
  const GroundTruth gt = generate_ground_truth(100, 20, 2, 81);
  FedConfig config;
  config.n = 100;
  config.d = 20;
  config.k = 2;
  config.m = 5;
  config.r = 1.0;
  config.noise_var = 0.0;
  config.grad_mode = GradMode::kPopulation;
  config.rounds = 200;
  config.seed = 81;
  const FedTrace trace = run_fedrep(gt, config);

  std::vector<double> rep, avg, local;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const NewClientReport report =
        new_client_eval(trace.final_b, gt, 2, 1e-3, 9000 + s, 10000);
    rep.push_back(report.mse_fedrep);
    avg.push_back(report.mse_fedavg_style);
    local.push_back(report.mse_local);
  }
  const double med_rep = median_of(rep);
  const double med_avg = median_of(avg);
  const double med_local = median_of(local);
  CheckBody body;
  body.pass = med_rep < 0.1 * med_local && med_rep < med_avg;
  body.detail = "median mse: shared-rep " + fmt(med_rep) + ", single-model " +
                fmt(med_avg) + ", local " + fmt(med_local);
  return body;
}

CheckBody check_determinism() {
  ExperimentConfig config;
  config.command = "fedrep";
  config.rounds = 500;
  config.seed = 101;
  config.replicates = 3;

  const char* saved = std::getenv("FEDREP_LAB_THREADS");
  const std::string saved_value = saved ? saved : "";
  setenv("FEDREP_LAB_THREADS", "1", 1);
  const std::string first = run_experiment(config).csv;
  const std::string second = run_experiment(config).csv;
  setenv("FEDREP_LAB_THREADS", "4", 1);
  const std::string threaded = run_experiment(config).csv;
  if (saved != nullptr) {
    setenv("FEDREP_LAB_THREADS", saved_value.c_str(), 1);
  } else {
    unsetenv("FEDREP_LAB_THREADS");
  }

  CheckBody body;
  body.pass = first == second && first == threaded;
  body.detail = std::string("repeat run ") +
                (first == second ? "identical" : "differs") +
                ", 4-thread run " +
                (first == threaded ? "identical" : "differs") + " (" +
                std::to_string(first.size()) + " bytes)";
  return body;
}

CheckBody check_negative_control() {
  // Wiring control for the reporting path: with the step forced to twice
  // the certified bound, the bundled theorem check must come back as a
  // failure, not a rubber stamp.
  const FullMeasProblem problem = make_fullmeas_problem(30, 20, 3, 7);
  const Matrix v0 = default_v0(problem, 7);
  const double eta = 2.0 * theorem_step_size(problem, qr_decompose(v0).r);

  std::string first_broken = "none";
  try {
    const FullMeasTrace trace = run_fullmeas(problem, v0, eta, 100);
    const double cap = 2.0 * trace.sigma_max_r0 * trace.sigma_max_r0 + 1e-8;
    for (Index t = 0; t < trace.rounds.size() && first_broken == "none"; ++t) {
      const FullMeasRound& rec = trace.rounds[t];
      if (rec.sigma_max_r * rec.sigma_max_r > cap) {
        first_broken = "norm cap, round " + std::to_string(t);
      } else if (t > 0 &&
                 rec.dist > trace.rate_bound * trace.rounds[t - 1].dist + 1e-9) {
        first_broken = "per-round contraction, round " + std::to_string(t);
      }
    }
    if (first_broken == "none" &&
        trace.final_loss() >
            trace.loss_bound(trace.rounds.size() - 1) * 1.05) {
      first_broken = "final loss bound";
    }
  } catch (const DivergedError&) {
    first_broken = "divergence guard";
  }

  CheckBody body;
  body.pass = first_broken != "none";  // the check must report a failure
  body.detail = "first reported violation at 2x step: " + first_broken;
  return body;
}

}  // namespace

std::vector<CheckResult> run_verification_battery() {
  std::vector<CheckResult> results;
  results.push_back(run_check(
      1, "factorization R-recursion, monotone spectrum, norm cap", 1000,
      check_r_recursion));
  results.push_back(run_check(
      2, "factorization per-round contraction and final loss bound", 1000,
      check_fullmeas_contraction));
  results.push_back(
      run_check(3, "identity-target loss curve", 0, check_identity_case));
  results.push_back(run_check(
      4, "population-mode contraction at the certified rate", 5000,
      check_population_contraction));
  results.push_back(run_check(
      5, "empirical convergence and head-accuracy ordering", 30000,
      check_empirical_ordering));
  results.push_back(run_check(
      6, "orthonormalized and plain iterates share a span", 0,
      check_ortho_equivalence));
  results.push_back(run_check(
      7, "representation gradient vs central finite differences", 0,
      check_gradient_oracle));
  results.push_back(run_check(
      8, "head update vs normal-equation elimination oracle", 0,
      check_head_oracle));
  results.push_back(run_check(
      9, "single-model analytic error vs descent oracle", 0,
      check_single_model_error));
  results.push_back(
      run_check(10, "new-client transfer gap", 10000, check_new_client_gap));
  results.push_back(run_check(
      11, "byte-identical traces across repeats and thread counts", 0,
      check_determinism));
  results.push_back(run_check(
      12, "negative control: oversized step is reported as a failure", 0,
      check_negative_control));
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

std::string render_check_table(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  for (const CheckResult& r : results) {
    char line[160];
    std::snprintf(line, sizeof line, "[%s] %2d  %-58s %8.1f ms\n",
                  r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.millis);
    out << line;
    if (!r.detail.empty()) out << "         " << r.detail << "\n";
  }
  out << (all_passed(results) ? "all checks passed" : "CHECK FAILURES PRESENT")
      << "\n";
  return out.str();
}

}  // namespace fedrep
