#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "pdeop/fdm.hpp"
#include "pdeop/physics.hpp"

namespace pdeop {

struct TrainConfig {
  int function_count = 500;   // N
  int sensor_count = 100;     // m
  int boundary_points = 100;  // P per function
  int interior_points = 100;  // Q per function
  long iterations = 10000;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  Activation activation = Activation::relu;
  int embedding_dim = 64;  // q
  std::vector<int> branch_hidden{64, 64};
  std::vector<int> trunk_hidden{64, 64};
  StencilConfig stencil{};
  int functions_per_batch = 0;  // 0 = full batch (all N each iteration)
  int log_every = 100;
};

struct Dataset {
  std::shared_ptr<const SensorGrid> sensors;
  std::vector<Sample> samples;
  Domain domain;
  uint64_t seed = 0;
};

struct MetricRecord {
  long iteration = 0;
  double physics_loss = 0.0;
  double operator_loss = 0.0;
  double total_loss = 0.0;
  double seconds = 0.0;
};
using MetricHistory = std::vector<MetricRecord>;

struct FunctionError {
  int index = 0;
  double rel_l2 = 0.0;
  double max_err = 0.0;
  bool fdm_failed = false;
};

struct ErrorReport {
  std::vector<FunctionError> entries;
  double mean_rel_l2 = 0.0;
  double median_rel_l2 = 0.0;
  int evaluated = 0;
  int failed = 0;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Dataset generate_dataset(const TrainConfig& cfg, const GpConfig& gp_cfg, Domain domain);

/// Held-out source functions from a seed stream disjoint from the training
/// dataset's.
std::vector<SourceFunction> generate_test_functions(int count, const TrainConfig& cfg,
                                                    const GpConfig& gp_cfg, Domain domain);

DeepOnetModel make_model(const TrainConfig& cfg, Domain domain);

/// Optional per-iteration progress callback: (iteration, record).
using ProgressFn = std::function<void(const MetricRecord&)>;

/// Full-batch ADAM on the total loss. Logs every cfg.log_every iterations
/// (plus iteration 0 and the final iteration). Deterministic given seeds and
/// a fixed thread count.
MetricHistory train(DeepOnetModel& model, const Dataset& data, const TrainConfig& cfg,
                    const DiffusionFunction& alpha, const ProgressFn& progress = {});

/// Compare the operator prediction against the FDM oracle on a uniform
/// grid_n x grid_n grid over the closed domain. Functions whose FDM solve
/// fails are flagged and excluded from the aggregates.
ErrorReport evaluate(const DeepOnetModel& model,
                     std::span<const SourceFunction> test_functions, Domain domain,
                     const FdmConfig& fdm_cfg, const DiffusionFunction& alpha,
                     int grid_n = 50);

/// Versioned binary checkpoint (model + metric history); round-trip bit-exact.
void save_checkpoint(const DeepOnetModel& model, const MetricHistory& history,
                     const std::string& path);
std::pair<DeepOnetModel, MetricHistory> load_checkpoint(const std::string& path);

/// Versioned binary dataset container; byte-identical for identical configs.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

void write_metrics_csv(const MetricHistory& history, std::ostream& out);
void write_report_csv(const ErrorReport& report, std::ostream& out);

}  // namespace pdeop
