#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdeop/tensor.hpp"

namespace pdeop {

enum class Activation { relu, tanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

inline double activate(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// relu subgradient at 0 is 0 by convention.
inline double activate_deriv(Activation a, double z) {
  if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
  double t = std::tanh(z);
  return 1.0 - t * t;
}

struct MlpConfig {
  std::vector<int> layer_sizes;  // input dim first, output dim last
  Activation activation = Activation::relu;
  uint64_t init_seed = 0;
};

/// Per-layer weights (out x in, row-major) and biases. Activation is carried
/// along so forward evaluation needs nothing else.
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation = Activation::relu;

  int layer_count() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return weights.front().cols; }
  int output_dim() const { return weights.back().rows; }
  std::vector<int> layer_sizes() const;
  size_t param_count() const;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PoisonedGradientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// He-scaled normals for relu, Glorot for tanh; biases zero. Deterministic in
/// config.init_seed.
MlpParams mlp_init(const MlpConfig& config);

/// Affine + activation per layer; last layer linear.
Vector mlp_forward(const MlpParams& params, std::span<const double> input);

/// Flat-vector packing, fixed layer order: W_1 row-major, b_1, W_2, b_2, ...
void pack_params(const MlpParams& p, double* out);
void unpack_params(MlpParams& p, const double* in);
Vector flatten(const MlpParams& p);

/// Zero-valued gradient holder with the same shapes as `like`.
MlpParams zeros_like(const MlpParams& like);
void accumulate(MlpParams& into, const MlpParams& from);
void scale(MlpParams& p, double s);

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(size_t n, double lr = 1e-3)
      : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {}
};

/// One bias-corrected ADAM step over a flat parameter vector. Throws
/// PoisonedGradientError on NaN gradients without touching params.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// MlpParams-shaped convenience wrapper over the flat update.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state);

}  // namespace pdeop
