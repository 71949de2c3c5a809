#include "pdeop/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "pdeop/rng.hpp"

namespace pdeop {
namespace {

constexpr uint64_t kTagTrainGp = 0x74726e67;   // training GP draws
constexpr uint64_t kTagTestGp = 0x74737467;    // held-out GP draws
constexpr uint64_t kTagColloc = 0x636f6c6c;    // collocation sampling
constexpr uint64_t kTagBatch = 0x62617463;     // minibatch selection

CollocationSet sample_collocation(const TrainConfig& cfg, Domain d, uint64_t seed) {
  CollocationSet set;
  CounterRng rng(seed);
  const double hx = cfg.stencil.h_x, ht = cfg.stencil.h_tau;
  set.interior.reserve(cfg.interior_points);
  for (int j = 0; j < cfg.interior_points; ++j)
    set.interior.push_back({rng.uniform(ht, d.time_horizon - ht),
                            rng.uniform(-d.half_width + hx, d.half_width - hx)});
  // ceil(P/2) on the initial line, the rest split between x = -L and x = +L.
  const int p = cfg.boundary_points;
  const int n_init = (p + 1) / 2;
  const int n_left = (p - n_init + 1) / 2;
  const int n_right = p - n_init - n_left;
  set.boundary.reserve(p);
  for (int k = 0; k < n_init; ++k)
    set.boundary.push_back({0.0, rng.uniform(-d.half_width, d.half_width)});
  for (int k = 0; k < n_left; ++k)
    set.boundary.push_back({rng.uniform(0.0, d.time_horizon), -d.half_width});
  for (int k = 0; k < n_right; ++k)
    set.boundary.push_back({rng.uniform(0.0, d.time_horizon), d.half_width});
  return set;
}

}  // namespace

Dataset generate_dataset(const TrainConfig& cfg, const GpConfig& gp_cfg, Domain domain) {
  if (cfg.function_count < 1 || cfg.sensor_count < 2 || cfg.boundary_points < 1 ||
      cfg.interior_points < 1)
    throw ConfigError("generate_dataset: counts must be positive");
  Dataset data;
  data.domain = domain;
  data.seed = cfg.seed;
  auto grid = std::make_shared<SensorGrid>(
      SensorGrid::uniform(cfg.sensor_count, domain.half_width));
  data.sensors = grid;
  Matrix chol = cholesky_jittered(kernel_matrix(*grid, gp_cfg), gp_cfg);
  data.samples.reserve(cfg.function_count);
  for (int i = 0; i < cfg.function_count; ++i) {
    Sample s;
    s.source = sample_source(chol, grid, derive_seed(cfg.seed, kTagTrainGp, i));
    s.colloc = sample_collocation(cfg, domain, derive_seed(cfg.seed, kTagColloc, i));
    data.samples.push_back(std::move(s));
  }
  return data;
}

std::vector<SourceFunction> generate_test_functions(int count, const TrainConfig& cfg,
                                                    const GpConfig& gp_cfg, Domain domain) {
  auto grid = std::make_shared<SensorGrid>(
      SensorGrid::uniform(cfg.sensor_count, domain.half_width));
  Matrix chol = cholesky_jittered(kernel_matrix(*grid, gp_cfg), gp_cfg);
  std::vector<SourceFunction> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(sample_source(chol, grid, derive_seed(cfg.seed, kTagTestGp, i)));
  return out;
}

DeepOnetModel make_model(const TrainConfig& cfg, Domain domain) {
  return make_deeponet(cfg.sensor_count, cfg.embedding_dim, cfg.branch_hidden,
                       cfg.trunk_hidden, cfg.activation, cfg.seed, domain);
}

namespace {

// Flat layout: branch params, trunk params, b0.
size_t flat_size(const DeepOnetModel& m) {
  return m.branch.param_count() + m.trunk.param_count() + 1;
}

void pack_model(const DeepOnetModel& m, Vector& out) {
  out.resize(flat_size(m));
  pack_params(m.branch, out.data());
  pack_params(m.trunk, out.data() + m.branch.param_count());
  out.back() = m.output_bias;
}

void unpack_model(DeepOnetModel& m, const Vector& in) {
  unpack_params(m.branch, in.data());
  unpack_params(m.trunk, in.data() + m.branch.param_count());
  m.output_bias = in.back();
}

void pack_grads(const ModelGrads& g, size_t branch_n, Vector& out) {
  pack_params(g.branch, out.data());
  pack_params(g.trunk, out.data() + branch_n);
  out.back() = g.output_bias;
}

}  // namespace

MetricHistory train(DeepOnetModel& model, const Dataset& data, const TrainConfig& cfg,
                    const DiffusionFunction& alpha, const ProgressFn& progress) {
  if (model.sensor_count != data.sensors->size())
    throw ShapeError("train: model sensor count != dataset sensor count");
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
        .count();
  };

  MetricHistory history;
  auto log = [&](long iter, const LossBreakdown& l) {
    MetricRecord rec{iter, l.physics, l.operator_, l.total, elapsed()};
    history.push_back(rec);
    if (progress) progress(rec);
  };

  const int n = static_cast<int>(data.samples.size());
  const int batch = cfg.functions_per_batch > 0
                        ? std::min(cfg.functions_per_batch, n)
                        : n;

  Vector params, grads_flat(flat_size(model));
  pack_model(model, params);
  AdamState state(params.size(), cfg.learning_rate);

  std::vector<Sample> batch_samples;
  auto batch_span = [&](long iter) -> std::span<const Sample> {
    if (batch == n) return data.samples;
    CounterRng rng(derive_seed(cfg.seed, kTagBatch, static_cast<uint64_t>(iter)));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int j = 0; j < batch; ++j) {
      int k = j + static_cast<int>(rng.uniform() * (n - j));
      std::swap(idx[j], idx[std::min(k, n - 1)]);
    }
    batch_samples.clear();
    for (int j = 0; j < batch; ++j) batch_samples.push_back(data.samples[idx[j]]);
    return batch_samples;
  };

  LossBreakdown losses;
  for (long k = 1; k <= cfg.iterations; ++k) {
    auto samples = batch_span(k - 1);
    ModelGrads g;
    try {
      g = loss_gradient(model, samples, alpha, cfg.stencil, &losses);
      if ((k - 1) % cfg.log_every == 0) log(k - 1, losses);
      pack_grads(g, model.branch.param_count(), grads_flat);
      adam_step(params, grads_flat, state);
    } catch (const PoisonedGradientError& e) {
      // Model keeps the last good parameters; report the iteration.
      throw PoisonedGradientError("train: aborted at iteration " + std::to_string(k) +
                                  ": " + e.what());
    }
    unpack_model(model, params);
  }

  // Loss at the final parameters (or the initial ones for a 0-iteration run).
  auto samples = batch_span(cfg.iterations);
  LossBreakdown final_losses;
  final_losses.physics = physics_loss(model, samples, alpha, cfg.stencil);
  final_losses.operator_ = operator_loss(model, samples);
  final_losses.total = final_losses.physics + final_losses.operator_;
  log(cfg.iterations, final_losses);
  return history;
}

ErrorReport evaluate(const DeepOnetModel& model,
                     std::span<const SourceFunction> test_functions, Domain domain,
                     const FdmConfig& fdm_cfg, const DiffusionFunction& alpha,
                     int grid_n) {
  ErrorReport report;
  Vector taus(grid_n), xs(grid_n);
  for (int i = 0; i < grid_n; ++i) {
    taus[i] = domain.time_horizon * i / (grid_n - 1);
    xs[i] = -domain.half_width + 2.0 * domain.half_width * i / (grid_n - 1);
  }
  std::vector<double> oks;
  for (size_t f = 0; f < test_functions.size(); ++f) {
    FunctionError fe;
    fe.index = static_cast<int>(f);
    try {
      FdmSolution sol = solve_fdm(test_functions[f], domain, fdm_cfg, alpha);
      Matrix pred = operator_eval_grid(model, test_functions[f], taus, xs);
      double num = 0.0, den = 0.0, mx = 0.0;
      for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j) {
          double ref = sol.interpolate(taus[i], xs[j]);
          double d = pred(i, j) - ref;
          num += d * d;
          den += ref * ref;
          mx = std::max(mx, std::fabs(d));
        }
      fe.rel_l2 = den > 0.0 ? std::sqrt(num / den) : (num > 0.0 ? HUGE_VAL : 0.0);
      fe.max_err = mx;
      oks.push_back(fe.rel_l2);
    } catch (const NonconvergenceError&) {
      fe.fdm_failed = true;
      ++report.failed;
    }
    report.entries.push_back(fe);
  }
  report.evaluated = static_cast<int>(oks.size());
  if (!oks.empty()) {
    report.mean_rel_l2 =
        std::accumulate(oks.begin(), oks.end(), 0.0) / static_cast<double>(oks.size());
    std::sort(oks.begin(), oks.end());
    size_t m = oks.size() / 2;
    report.median_rel_l2 =
        oks.size() % 2 ? oks[m] : 0.5 * (oks[m - 1] + oks[m]);
  }
  return report;
}

void write_metrics_csv(const MetricHistory& history, std::ostream& out) {
  out << "iteration,physics_loss,operator_loss,total_loss,seconds\n";
  char buf[160];
  for (const MetricRecord& r : history) {
    snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.3f\n", r.iteration,
             r.physics_loss, r.operator_loss, r.total_loss, r.seconds);
    out << buf;
  }
}

void write_report_csv(const ErrorReport& report, std::ostream& out) {
  out << "function,rel_l2,max_err,fdm_failed\n";
  char buf[160];
  for (const FunctionError& e : report.entries) {
    snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", e.index, e.rel_l2, e.max_err,
             e.fdm_failed ? 1 : 0);
    out << buf;
  }
  snprintf(buf, sizeof buf, "aggregate,%.17g,%.17g,%d\n", report.mean_rel_l2,
           report.median_rel_l2, report.failed);
  out << buf;
}

}  // namespace pdeop
