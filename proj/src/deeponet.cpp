#include "pdeop/deeponet.hpp"

#include <cmath>

#include "pdeop/rng.hpp"

namespace pdeop {

void DeepOnetModel::trunk_input(QueryPoint y, double out[2]) const {
  if (domain.time_horizon == 1.0 && domain.half_width == 1.0) {
    out[0] = y.tau;
    out[1] = y.x;
  } else {
    out[0] = 2.0 * y.tau / domain.time_horizon - 1.0;
    out[1] = y.x / domain.half_width;
  }
}

DeepOnetModel make_deeponet(int sensor_count, int embedding_dim,
                            const std::vector<int>& branch_hidden,
                            const std::vector<int>& trunk_hidden,
                            Activation activation, uint64_t init_seed,
                            Domain domain, double output_scale) {
  if (sensor_count < 1 || embedding_dim < 1)
    throw ConfigError("make_deeponet: m and q must be >= 1");
  if (output_scale <= 0) throw ConfigError("make_deeponet: output_scale must be > 0");

  auto sizes = [&](int in, const std::vector<int>& hidden) {
    std::vector<int> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(embedding_dim);
    return s;
  };
  DeepOnetModel m;
  m.domain = domain;
  m.sensor_count = sensor_count;
  m.embedding_dim = embedding_dim;
  m.output_scale = output_scale;
  m.branch = mlp_init({sizes(sensor_count, branch_hidden), activation,
                       derive_seed(init_seed, 0x6272)});
  m.trunk = mlp_init({sizes(2, trunk_hidden), activation,
                      derive_seed(init_seed, 0x7472)});
  return m;
}

Vector branch_forward(const DeepOnetModel& model, const SourceFunction& g) {
  if (static_cast<int>(g.sensor_values.size()) != model.sensor_count)
    throw ShapeError("branch_forward: sensor count mismatch");
  Vector e = mlp_forward(model.branch, g.sensor_values);
  for (double& v : e) v *= model.output_scale;
  return e;
}

Vector trunk_forward(const DeepOnetModel& model, QueryPoint y) {
  double in[2];
  model.trunk_input(y, in);
  return mlp_forward(model.trunk, std::span<const double>(in, 2));
}

double operator_eval(const DeepOnetModel& model, const SourceFunction& g, QueryPoint y) {
  Vector b = branch_forward(model, g);
  Vector t = trunk_forward(model, y);
  double s = model.output_bias;
  for (int i = 0; i < model.embedding_dim; ++i) s += b[i] * t[i];
  return s;
}

Matrix operator_eval_grid(const DeepOnetModel& model, const SourceFunction& g,
                          std::span<const double> taus, std::span<const double> xs) {
  for (double t : taus)
    if (t < 0.0 || t > model.domain.time_horizon)
      throw DomainError("operator_eval_grid: tau outside [0, T]");
  for (double x : xs)
    if (x < -model.domain.half_width || x > model.domain.half_width)
      throw DomainError("operator_eval_grid: x outside [-L, L]");

  Vector b = branch_forward(model, g);
  Matrix out(static_cast<int>(taus.size()), static_cast<int>(xs.size()));
  for (size_t i = 0; i < taus.size(); ++i)
    for (size_t j = 0; j < xs.size(); ++j) {
      Vector t = trunk_forward(model, {taus[i], xs[j]});
      double s = model.output_bias;
      for (int k = 0; k < model.embedding_dim; ++k) s += b[k] * t[k];
      out(static_cast<int>(i), static_cast<int>(j)) = s;
    }
  return out;
}

}  // namespace pdeop
