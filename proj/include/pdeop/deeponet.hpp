#pragma once

#include <cstdint>

#include "pdeop/gp.hpp"
#include "pdeop/nnet.hpp"
#include "pdeop/tensor.hpp"

namespace pdeop {

/// Space-time rectangle (0,T) x (-L,L).
struct Domain {
  double time_horizon = 1.0;  // T
  double half_width = 1.0;    // L
};

struct QueryPoint {
  double tau = 0.0;
  double x = 0.0;
};

/// Unstacked DeepONet: branch net over the m sensor values, trunk net over
/// (tau, x), readout = c * dot(branch, trunk) + b0.
struct DeepOnetModel {
  Domain domain;
  int sensor_count = 0;    // m, branch input dim
  int embedding_dim = 0;   // q
  double output_scale = 1.0;  // c, fixed, never trained
  double output_bias = 0.0;   // b0, trainable
  MlpParams branch;
  MlpParams trunk;

  /// Trunk input coordinates: raw for the unit domain, otherwise affinely
  /// rescaled to [-1,1]^2.
  void trunk_input(QueryPoint y, double out[2]) const;
};

DeepOnetModel make_deeponet(int sensor_count, int embedding_dim,
                            const std::vector<int>& branch_hidden,
                            const std::vector<int>& trunk_hidden,
                            Activation activation, uint64_t init_seed,
                            Domain domain = {}, double output_scale = 1.0);

/// c * mlp_forward(branch, sensor values).
Vector branch_forward(const DeepOnetModel& model, const SourceFunction& g);

Vector trunk_forward(const DeepOnetModel& model, QueryPoint y);

double operator_eval(const DeepOnetModel& model, const SourceFunction& g, QueryPoint y);

/// Evaluation over the tensor grid taus x xs; the branch embedding is computed
/// once and reused.
Matrix operator_eval_grid(const DeepOnetModel& model, const SourceFunction& g,
                          std::span<const double> taus, std::span<const double> xs);

}  // namespace pdeop
