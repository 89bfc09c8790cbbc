#include "fedrep/fedrep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numeric>
#include <thread>

namespace fedrep {
namespace {

// Runs fn(i) for i in [0, count) on up to `threads` workers with a static
// stride partition. Every result slot is owned by exactly one index, so
// the outcome is identical for any worker count.
void parallel_for(Index count, unsigned threads,
                  const std::function<void(Index)>& fn) {
  if (threads <= 1 || count < 2) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned workers =
      static_cast<unsigned>(std::min<Index>(threads, count));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (Index i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<Index> sample_participants(Index n, Index rn, std::uint64_t seed,
                                       Index round) {
  std::vector<Index> ids(n);
  std::iota(ids.begin(), ids.end(), Index{0});
  if (rn < n) {
    RandomStream stream =
        RandomStream::derive(seed, StreamPurpose::kClientSampling, 0, round);
    for (Index j = 0; j < rn; ++j) {
      const Index pick = j + stream.next_below(n - j);
      std::swap(ids[j], ids[pick]);
    }
    ids.resize(rn);
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

double batch_loss(const Matrix& b, const Vector& w, const SampleBatch& batch) {
  const Vector predicted = matvec(batch.x, matvec(b, w));
  double s = 0.0;
  for (Index j = 0; j < predicted.size(); ++j) {
    const double res = predicted[j] - batch.y[j];
    s += res * res;
  }
  return 0.5 * s / static_cast<double>(batch.y.size());
}

Vector head_gradient(const Matrix& b, const Vector& w,
                     const SampleBatch& batch) {
  // (1/m) (X b)^T (X b w - y)
  const Matrix xb = batch.x * b;
  Vector residual = matvec(xb, w);
  for (Index j = 0; j < residual.size(); ++j) residual[j] -= batch.y[j];
  return scaled(matvec_transposed(xb, residual),
                1.0 / static_cast<double>(batch.y.size()));
}

Vector tau_step_head(const Matrix& b, const SampleBatch& batch, Vector w,
                     const HeadPolicy& policy) {
  double alpha = policy.alpha;
  if (alpha < 0.0) {
    const double top = singular_values(batch.x * b).front();
    alpha = static_cast<double>(batch.y.size()) / (top * top);
  }
  for (Index step = 0; step < policy.tau; ++step) {
    w = axpy(-alpha, head_gradient(b, w, batch), w);
  }
  return w;
}

Vector tau_step_head_population(const Matrix& b, const Vector& target,
                                Vector w, const HeadPolicy& policy) {
  double alpha = policy.alpha;
  if (alpha < 0.0) {
    const double top = singular_values(b).front();
    alpha = 1.0 / (top * top);
  }
  for (Index step = 0; step < policy.tau; ++step) {
    Vector residual = matvec(b, w);
    for (Index i = 0; i < residual.size(); ++i) residual[i] -= target[i];
    w = axpy(-alpha, matvec_transposed(b, residual), w);
  }
  return w;
}

struct ClientResult {
  Vector head;
  Matrix gradient;
  Vector diag_head;  // head solved against the orthonormalized b
  double loss = 0.0;
};

}  // namespace

Index FedConfig::participants_per_round() const {
  // Guard against 0.1 * 100 landing a hair above 10 in binary.
  const double raw = r * static_cast<double>(n);
  const Index rn = static_cast<Index>(std::ceil(raw - 1e-9));
  return std::clamp<Index>(rn, 1, n);
}

void FedConfig::validate() const {
  if (k < 1 || k >= std::min(n, d)) {
    throw ConfigError("config: need 1 <= k < min(n, d)");
  }
  if (r <= 0.0 || r > 1.0) throw ConfigError("config: r must be in (0, 1]");
  if (m < 1) throw ConfigError("config: m must be >= 1");
  if (noise_var < 0.0) throw ConfigError("config: noise_var must be >= 0");
}

unsigned resolve_thread_count(unsigned configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("FEDREP_LAB_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1 && parsed <= 256) return static_cast<unsigned>(parsed);
  }
  return 1;
}

Matrix init_representation(const GroundTruth& gt, const FedConfig& config) {
  RandomStream stream =
      RandomStream::derive(config.seed, StreamPurpose::kInitRepresentation);
  if (config.init == InitMode::kRandom) {
    return orthonormalize(stream.gaussian_matrix(gt.d, gt.k)).matrix();
  }

  // Projected gradient descent on the stacked regressor matrix: client i
  // owns row i of the n x d estimate, each step is a full gradient pass
  // followed by a rank-k truncation.
  std::vector<SampleBatch> batches;
  batches.reserve(gt.n);
  double lipschitz = 0.0;
  for (Index i = 0; i < gt.n; ++i) {
    batches.push_back(sample_batch(gt, i, config.m, config.noise_var,
                                   config.seed, 0, StreamPurpose::kInitBatch));
    const double top = singular_values(batches.back().x).front();
    lipschitz = std::max(lipschitz, top * top / static_cast<double>(config.m));
  }
  const double alpha = 0.5 / lipschitz;

  Matrix estimate(gt.n, gt.d);
  for (Index step = 0; step < config.init_steps; ++step) {
    Matrix descended = estimate;
    for (Index i = 0; i < gt.n; ++i) {
      const SampleBatch& batch = batches[i];
      Vector residual = matvec(batch.x, estimate.row(i));
      for (Index j = 0; j < residual.size(); ++j) residual[j] -= batch.y[j];
      const Vector g = scaled(matvec_transposed(batch.x, residual),
                              1.0 / static_cast<double>(config.m));
      for (Index j = 0; j < gt.d; ++j) descended(i, j) -= alpha * g[j];
    }
    estimate = rank_k_truncation(descended, gt.k);
  }

  const SvdResult factors = svd(estimate);
  Matrix b0(gt.d, gt.k);
  for (Index i = 0; i < gt.d; ++i) {
    for (Index j = 0; j < gt.k; ++j) b0(i, j) = factors.v(i, j);
  }
  return b0;
}

Vector client_head_update(const Matrix& b, const SampleBatch& batch) {
  if (batch.y.size() < b.cols()) {
    throw RankDeficientError("client_head_update: batch smaller than head");
  }
  return least_squares(batch.x * b, batch.y);
}

Matrix client_rep_gradient(const Matrix& b, const Vector& w,
                           const SampleBatch& batch) {
  Vector residual = matvec(batch.x, matvec(b, w));
  for (Index j = 0; j < residual.size(); ++j) residual[j] -= batch.y[j];
  const Vector xt_res = scaled(matvec_transposed(batch.x, residual),
                               1.0 / static_cast<double>(batch.y.size()));
  return outer(xt_res, w);
}

std::pair<Vector, Matrix> population_head_and_gradient(const Matrix& b,
                                                       const GroundTruth& gt,
                                                       Index client_id) {
  const Vector target = gt.client_regressor(client_id);
  const Vector w = least_squares(b, target);
  Vector residual = matvec(b, w);
  for (Index i = 0; i < residual.size(); ++i) residual[i] -= target[i];
  return {w, outer(residual, w)};
}

double population_loss(const Matrix& b, const GroundTruth& gt) {
  // (1/2n) sum_i ||(I - P_b) B* w_i*||^2 via the k x k residual Gram.
  const Matrix coeffs = least_squares(b, gt.b_star.matrix());
  const Matrix residual = gt.b_star.matrix() - b * coeffs;
  const Matrix gram = residual.gram_with(residual);
  double total = 0.0;
  for (Index i = 0; i < gt.n; ++i) {
    const Vector w = gt.w_star.row(i);
    total += dot(w, matvec(gram, w));
  }
  return 0.5 * total / static_cast<double>(gt.n);
}

FedRound server_round_with_policy(FedState& state, const GroundTruth& gt,
                                  const FedConfig& config,
                                  const HeadPolicy& policy) {
  const Index rn = config.participants_per_round();
  const std::vector<Index> ids =
      sample_participants(gt.n, rn, config.seed, state.round);
  const unsigned threads = resolve_thread_count(config.threads);
  const bool population = config.grad_mode == GradMode::kPopulation;

  // Orthonormalized copy of the current representation, used only by the
  // residual diagnostic (it needs heads solved against an orthonormal
  // basis to be comparable to W* B*^T Bhat).
  const Matrix b_hat = config.ortho ? state.b : orthonormalize(state.b).matrix();

  std::vector<ClientResult> results(rn);
  parallel_for(rn, threads, [&](Index slot) {
    const Index id = ids[slot];
    ClientResult& out = results[slot];
    if (population) {
      const Vector target = gt.client_regressor(id);
      if (policy.tau == 0) {
        auto [w, grad] = population_head_and_gradient(state.b, gt, id);
        out.head = std::move(w);
        out.gradient = std::move(grad);
      } else {
        out.head = tau_step_head_population(state.b, target,
                                            state.heads.row(id), policy);
        Vector residual = matvec(state.b, out.head);
        for (Index i = 0; i < residual.size(); ++i) residual[i] -= target[i];
        out.gradient = outer(residual, out.head);
      }
      Vector fit = matvec(state.b, out.head);
      double s = 0.0;
      for (Index i = 0; i < fit.size(); ++i) {
        const double res = fit[i] - target[i];
        s += res * res;
      }
      out.loss = 0.5 * s;
      out.diag_head = matvec_transposed(b_hat, target);
    } else {
      const std::uint64_t counter =
          config.data_mode == DataMode::kFresh ? state.round : 0;
      const SampleBatch batch = sample_batch(gt, id, config.m,
                                             config.noise_var, config.seed,
                                             counter);
      out.head = policy.tau == 0
                     ? client_head_update(state.b, batch)
                     : tau_step_head(state.b, batch, state.heads.row(id),
                                     policy);
      out.gradient = client_rep_gradient(state.b, out.head, batch);
      out.loss = batch_loss(state.b, out.head, batch);
      out.diag_head =
          config.ortho ? out.head : client_head_update(b_hat, batch);
    }
  });

  // Deterministic ordered reduction, independent of the worker count.
  Matrix mean_gradient(gt.d, gt.k);
  double emp_loss = 0.0;
  Matrix diag_heads(rn, gt.k);
  Matrix w_subset(rn, gt.k);
  for (Index slot = 0; slot < rn; ++slot) {
    mean_gradient = mean_gradient + results[slot].gradient;
    emp_loss += results[slot].loss;
    diag_heads.set_row(slot, results[slot].diag_head);
    w_subset.set_row(slot, gt.w_star.row(ids[slot]));
    state.heads.set_row(ids[slot], results[slot].head);
  }
  mean_gradient = mean_gradient.scaled(1.0 / static_cast<double>(rn));
  emp_loss /= static_cast<double>(rn);

  FedRound rec;
  rec.round = state.round;
  rec.dist = principal_angle_distance(state.b, gt.b_star.matrix());
  rec.pop_loss = population_loss(state.b, gt);
  rec.emp_loss = emp_loss;
  const Vector sigma_sub = singular_values(
      w_subset.scaled(1.0 / std::sqrt(static_cast<double>(rn))));
  rec.sigma_min_sub = sigma_sub.back();
  rec.sigma_max_sub = sigma_sub.front();
  rec.f_norm = residual_f_diagnostic(OrthonormalBasis(b_hat), diag_heads, gt,
                                     ids);
  rec.participants = rn;

  state.b = state.b - mean_gradient.scaled(config.eta);
  if (!state.b.all_finite()) {
    throw DivergedError("server_round: non-finite representation");
  }
  if (config.ortho) state.b = orthonormalize(state.b).matrix();
  state.round += 1;
  return rec;
}

FedRound server_round(FedState& state, const GroundTruth& gt,
                      const FedConfig& config) {
  return server_round_with_policy(state, gt, config, HeadPolicy{});
}

FedTrace run_fedrep_with_policy(const GroundTruth& gt, const FedConfig& config,
                                const HeadPolicy& policy) {
  config.validate();
  if (gt.n != config.n || gt.d != config.d || gt.k != config.k) {
    throw ConfigError("run_fedrep: config dimensions disagree with ground truth");
  }

  FedTrace trace;
  trace.bounds = spectral_bounds(gt, config.participants_per_round());
  const double eta_cap =
      1.0 / (4.0 * trace.bounds.sigma_max * trace.bounds.sigma_max);

  FedConfig effective = config;
  if (effective.eta <= 0.0) {
    effective.eta = eta_cap;
  } else if (effective.eta > eta_cap * (1.0 + 1e-12)) {
    trace.warnings.push_back(
        "eta exceeds the admissible step bound 1/(4 sigma_max^2)");
  }
  trace.eta = effective.eta;

  FedState state;
  state.b = init_representation(gt, effective);
  state.heads = Matrix(gt.n, gt.k);

  trace.dist0 = principal_angle_distance(state.b, gt.b_star.matrix());
  trace.e0 = 1.0 - trace.dist0 * trace.dist0;
  const double shrink = 1.0 - effective.eta * trace.e0 *
                                  trace.bounds.sigma_min *
                                  trace.bounds.sigma_min / 2.0;
  trace.rate_bound = std::sqrt(std::max(0.0, shrink));

  for (Index t = 0; t < effective.rounds; ++t) {
    FedRound rec = server_round_with_policy(state, gt, effective, policy);
    rec.rate_bound = trace.rate_bound;
    trace.rounds.push_back(rec);
  }

  // Closing record for the post-training representation; no sampling
  // happened for it, so per-round fields stay at zero.
  FedRound last;
  last.round = effective.rounds;
  last.dist = principal_angle_distance(state.b, gt.b_star.matrix());
  last.pop_loss = population_loss(state.b, gt);
  last.rate_bound = trace.rate_bound;
  trace.rounds.push_back(last);
  trace.final_b = std::move(state.b);
  trace.final_heads = std::move(state.heads);
  return trace;
}

FedTrace run_fedrep(const GroundTruth& gt, const FedConfig& config) {
  return run_fedrep_with_policy(gt, config, HeadPolicy{});
}

double residual_f_diagnostic(const OrthonormalBasis& b_hat,
                             const Matrix& heads_matrix, const GroundTruth& gt,
                             const std::vector<Index>& subset) {
  if (heads_matrix.rows() != subset.size()) {
    throw DimensionError("residual_f_diagnostic: subset size mismatch");
  }
  // W*_subset B*^T Bhat, rows in subset order.
  const Matrix cross = gt.b_star.matrix().gram_with(b_hat.matrix());  // k x k
  double total = 0.0;
  for (Index i = 0; i < subset.size(); ++i) {
    const Vector expected = matvec_transposed(cross, gt.w_star.row(subset[i]));
    for (Index j = 0; j < heads_matrix.cols(); ++j) {
      const double diff = heads_matrix(i, j) - expected[j];
      total += diff * diff;
    }
  }
  return std::sqrt(total);
}

}  // namespace fedrep
