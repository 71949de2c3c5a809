#include "pdeop/physics.hpp"

#include <cmath>

namespace pdeop {

double DiffusionFunction::alpha(double u) const {
  switch (kind) {
    case Kind::quadratic:
      return u * u;
    case Kind::identity:
      return u;
    case Kind::power:
      return std::pow(std::fabs(u), exponent - 1.0) * u;
  }
  return 0.0;
}

double DiffusionFunction::alpha_prime(double u) const {
  switch (kind) {
    case Kind::quadratic:
      return 2.0 * u;
    case Kind::identity:
      return 1.0;
    case Kind::power:
      return exponent * std::pow(std::fabs(u), exponent - 1.0);
  }
  return 0.0;
}

DiffusionFunction DiffusionFunction::from_string(const std::string& s, double p) {
  if (s == "quadratic") return quadratic();
  if (s == "identity") return identity();
  if (s == "power") return power(p);
  throw ConfigError("unknown diffusion function: " + s);
}

std::string DiffusionFunction::name() const {
  switch (kind) {
    case Kind::quadratic:
      return "quadratic";
    case Kind::identity:
      return "identity";
    case Kind::power:
      return "power";
  }
  return "?";
}

void check_margin(const DeepOnetModel& model, QueryPoint y, const StencilConfig& st) {
  const Domain& d = model.domain;
  if (y.tau - st.h_tau < 0.0 || y.tau + st.h_tau > d.time_horizon ||
      y.x - st.h_x < -d.half_width || y.x + st.h_x > d.half_width)
    throw MarginError("stencil point outside domain at (tau=" + std::to_string(y.tau) +
                      ", x=" + std::to_string(y.x) + ")");
}

void check_on_boundary(const DeepOnetModel& model, QueryPoint y) {
  const double tol = 1e-12;
  bool on = std::fabs(y.tau) <= tol ||
            std::fabs(y.x - model.domain.half_width) <= tol ||
            std::fabs(y.x + model.domain.half_width) <= tol;
  if (!on)
    throw ContractError("point not on the initial/boundary set: (tau=" +
                        std::to_string(y.tau) + ", x=" + std::to_string(y.x) + ")");
}

double residual_of_field(const std::function<double(double, double)>& field,
                         QueryPoint y, const DiffusionFunction& alpha,
                         const StencilConfig& st) {
  double d_tau =
      (field(y.tau + st.h_tau, y.x) - field(y.tau - st.h_tau, y.x)) / (2.0 * st.h_tau);
  double d_xx = (alpha.alpha(field(y.tau, y.x + st.h_x)) -
                 2.0 * alpha.alpha(field(y.tau, y.x)) +
                 alpha.alpha(field(y.tau, y.x - st.h_x))) /
                (st.h_x * st.h_x);
  return d_tau - d_xx;
}

double residual(const DeepOnetModel& model, const SourceFunction& g, QueryPoint y,
                const DiffusionFunction& alpha, const StencilConfig& st) {
  check_margin(model, y, st);
  Vector b = branch_forward(model, g);
  auto G = [&](double tau, double x) {
    Vector t = trunk_forward(model, {tau, x});
    double s = model.output_bias;
    for (int k = 0; k < model.embedding_dim; ++k) s += b[k] * t[k];
    return s;
  };
  double d_tau = (G(y.tau + st.h_tau, y.x) - G(y.tau - st.h_tau, y.x)) / (2.0 * st.h_tau);
  double d_xx = (alpha.alpha(G(y.tau, y.x + st.h_x)) - 2.0 * alpha.alpha(G(y.tau, y.x)) +
                 alpha.alpha(G(y.tau, y.x - st.h_x))) /
                (st.h_x * st.h_x);
  return d_tau - d_xx;
}

double physics_loss(const DeepOnetModel& model, std::span<const Sample> samples,
                    const DiffusionFunction& alpha, const StencilConfig& st) {
  if (samples.empty()) throw ContractError("physics_loss: empty dataset");
  double sum = 0.0;
  size_t count = 0;
  for (const Sample& s : samples) {
    for (const QueryPoint& y : s.colloc.interior) {
      double r = residual(model, s.source, y, alpha, st) - s.source.eval(y.x);
      sum += r * r;
      ++count;
    }
  }
  if (count == 0) throw ContractError("physics_loss: no interior points");
  return sum / static_cast<double>(count);
}

double operator_loss(const DeepOnetModel& model, std::span<const Sample> samples) {
  if (samples.empty()) throw ContractError("operator_loss: empty dataset");
  double sum = 0.0;
  size_t count = 0;
  for (const Sample& s : samples) {
    Vector b = branch_forward(model, s.source);
    for (const QueryPoint& y : s.colloc.boundary) {
      check_on_boundary(model, y);
      Vector t = trunk_forward(model, y);
      double v = model.output_bias;
      for (int k = 0; k < model.embedding_dim; ++k) v += b[k] * t[k];
      sum += v * v;
      ++count;
    }
  }
  if (count == 0) throw ContractError("operator_loss: no boundary points");
  return sum / static_cast<double>(count);
}

double total_loss(const DeepOnetModel& model, std::span<const Sample> samples,
                  const DiffusionFunction& alpha, const StencilConfig& st) {
  return physics_loss(model, samples, alpha, st) + operator_loss(model, samples);
}

}  // namespace pdeop
