#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdeop/deeponet.hpp"

namespace pdeop {

/// The nonlinearity inside the second spatial derivative.
struct DiffusionFunction {
  enum class Kind { quadratic, identity, power };
  Kind kind = Kind::quadratic;
  double exponent = 2.0;  // used by Kind::power only

  double alpha(double u) const;
  double alpha_prime(double u) const;

  static DiffusionFunction quadratic() { return {Kind::quadratic, 2.0}; }
  static DiffusionFunction identity() { return {Kind::identity, 1.0}; }
  static DiffusionFunction power(double p) { return {Kind::power, p}; }
  static DiffusionFunction from_string(const std::string& s, double p = 2.0);
  std::string name() const;
};

/// Central-difference steps for the input-space derivatives of the operator.
struct StencilConfig {
  double h_x = 1e-2;
  double h_tau = 1e-2;

  static StencilConfig for_domain(const Domain& d) {
    return {1e-2 * d.half_width, 1e-2 * d.time_horizon};
  }
};

/// Interior residual points plus initial/boundary points for one source
/// function.
struct CollocationSet {
  std::vector<QueryPoint> interior;
  std::vector<QueryPoint> boundary;  // on {tau=0} u {x=-L} u {x=L}
};

struct Sample {
  SourceFunction source;
  CollocationSet colloc;
};

struct MarginError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gradient of the total loss with respect to every trainable parameter.
struct ModelGrads {
  MlpParams branch;
  MlpParams trunk;
  double output_bias = 0.0;
};

struct LossBreakdown {
  double physics = 0.0;
  double operator_ = 0.0;
  double total = 0.0;
};

/// Stencil residual D_tau G - D_xx alpha(G) at y; five operator evaluations
/// sharing one branch embedding.
double residual(const DeepOnetModel& model, const SourceFunction& g, QueryPoint y,
                const DiffusionFunction& alpha, const StencilConfig& st);

/// Same stencil applied to an arbitrary scalar field; no domain checks.
double residual_of_field(const std::function<double(double, double)>& field,
                         QueryPoint y, const DiffusionFunction& alpha,
                         const StencilConfig& st);

/// (1/NQ) sum |R(y) - g(x)|^2 over all interior points.
double physics_loss(const DeepOnetModel& model, std::span<const Sample> samples,
                    const DiffusionFunction& alpha, const StencilConfig& st);

/// (1/NP) sum G^2 over all initial/boundary points (true values are zero).
double operator_loss(const DeepOnetModel& model, std::span<const Sample> samples);

double total_loss(const DeepOnetModel& model, std::span<const Sample> samples,
                  const DiffusionFunction& alpha, const StencilConfig& st);

/// Reverse-mode gradient of total_loss. OpenMP-parallel over source functions
/// with a fixed per-thread accumulation order (deterministic for a given
/// thread count). Optionally reports the loss values of the same pass.
ModelGrads loss_gradient(const DeepOnetModel& model, std::span<const Sample> samples,
                         const DiffusionFunction& alpha, const StencilConfig& st,
                         LossBreakdown* losses = nullptr);

/// Serial tape-based reference implementation of the same gradient; kept as
/// the oracle the fast kernel is tested against.
ModelGrads loss_gradient_reference(const DeepOnetModel& model,
                                   std::span<const Sample> samples,
                                   const DiffusionFunction& alpha,
                                   const StencilConfig& st,
                                   LossBreakdown* losses = nullptr);

void check_margin(const DeepOnetModel& model, QueryPoint y, const StencilConfig& st);
void check_on_boundary(const DeepOnetModel& model, QueryPoint y);

}  // namespace pdeop
