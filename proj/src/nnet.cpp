#include "pdeop/nnet.hpp"

#include <cmath>

#include "pdeop/rng.hpp"

namespace pdeop {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation: " + s);
}

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

std::vector<int> MlpParams::layer_sizes() const {
  std::vector<int> s;
  s.push_back(input_dim());
  for (const auto& w : weights) s.push_back(w.rows);
  return s;
}

size_t MlpParams::param_count() const {
  size_t n = 0;
  for (const auto& w : weights) n += w.data.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

MlpParams mlp_init(const MlpConfig& config) {
  if (config.layer_sizes.size() < 2)
    throw ConfigError("layer_sizes needs at least input and output dims");
  for (int s : config.layer_sizes)
    if (s < 1) throw ConfigError("layer_sizes entries must be >= 1");

  MlpParams p;
  p.activation = config.activation;
  CounterRng rng(derive_seed(config.init_seed, /*tag=*/0x6d6c7031));
  for (size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
    int fan_in = config.layer_sizes[l];
    int fan_out = config.layer_sizes[l + 1];
    double std_dev = config.activation == Activation::relu
                         ? std::sqrt(2.0 / fan_in)
                         : std::sqrt(2.0 / (fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data) v = std_dev * rng.normal();
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(fan_out, 0.0);
  }
  return p;
}

Vector mlp_forward(const MlpParams& params, std::span<const double> input) {
  if (static_cast<int>(input.size()) != params.input_dim())
    throw ShapeError("mlp_forward: input length " + std::to_string(input.size()) +
                     " != " + std::to_string(params.input_dim()));
  Vector a(input.begin(), input.end());
  int last = params.layer_count() - 1;
  for (int l = 0; l <= last; ++l) {
    const Matrix& w = params.weights[l];
    const Vector& b = params.biases[l];
    Vector z(w.rows);
    for (int i = 0; i < w.rows; ++i) {
      const double* wr = w.row(i);
      double acc = b[i];
      for (int j = 0; j < w.cols; ++j) acc += wr[j] * a[j];
      z[i] = l == last ? acc : activate(params.activation, acc);
    }
    a = std::move(z);
  }
  return a;
}

void pack_params(const MlpParams& p, double* out) {
  for (int l = 0; l < p.layer_count(); ++l) {
    out = std::copy(p.weights[l].data.begin(), p.weights[l].data.end(), out);
    out = std::copy(p.biases[l].begin(), p.biases[l].end(), out);
  }
}

void unpack_params(MlpParams& p, const double* in) {
  for (int l = 0; l < p.layer_count(); ++l) {
    std::copy(in, in + p.weights[l].data.size(), p.weights[l].data.begin());
    in += p.weights[l].data.size();
    std::copy(in, in + p.biases[l].size(), p.biases[l].begin());
    in += p.biases[l].size();
  }
}

Vector flatten(const MlpParams& p) {
  Vector out(p.param_count());
  pack_params(p, out.data());
  return out;
}

MlpParams zeros_like(const MlpParams& like) {
  MlpParams g;
  g.activation = like.activation;
  for (const auto& w : like.weights) g.weights.emplace_back(w.rows, w.cols);
  for (const auto& b : like.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

void accumulate(MlpParams& into, const MlpParams& from) {
  for (int l = 0; l < into.layer_count(); ++l) {
    for (size_t i = 0; i < into.weights[l].data.size(); ++i)
      into.weights[l].data[i] += from.weights[l].data[i];
    for (size_t i = 0; i < into.biases[l].size(); ++i)
      into.biases[l][i] += from.biases[l][i];
  }
}

void scale(MlpParams& p, double s) {
  for (auto& w : p.weights)
    for (double& v : w.data) v *= s;
  for (auto& b : p.biases)
    for (double& v : b) v *= s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw ShapeError("adam_step: size mismatch");
  for (double g : grads)
    if (std::isnan(g))
      throw PoisonedGradientError("adam_step: NaN gradient at step " +
                                  std::to_string(state.step_count + 1));
  ++state.step_count;
  double b1t = 1.0 - std::pow(state.beta1, state.step_count);
  double b2t = 1.0 - std::pow(state.beta2, state.step_count);
  for (size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    double mhat = m / b1t;
    double vhat = v / b2t;
    params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state) {
  Vector p = flatten(params);
  Vector g = flatten(grads);
  adam_step(p, g, state);
  unpack_params(params, p.data());
}

}  // namespace pdeop
