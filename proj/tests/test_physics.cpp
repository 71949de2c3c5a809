#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pdeop/physics.hpp"
#include "pdeop/rng.hpp"
#include "test_util.hpp"

using namespace pdeop;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<SensorGrid> grid_of(int m) {
  return std::make_shared<SensorGrid>(SensorGrid::uniform(m, 1.0));
}

SourceFunction constant_source(int m, double value) {
  return {Vector(m, value), grid_of(m)};
}

/// A model whose output is the constant b0: single-layer nets, zero weights
/// and biases.
DeepOnetModel constant_model(int m, double b0) {
  DeepOnetModel model;
  model.sensor_count = m;
  model.embedding_dim = 2;
  model.branch = mlp_init({{m, 2}, Activation::relu, 0});
  model.trunk = mlp_init({{2, 2}, Activation::relu, 0});
  model.branch.weights[0].fill(0.0);
  model.trunk.weights[0].fill(0.0);
  model.output_bias = b0;
  return model;
}

DeepOnetModel small_model(Activation act, uint64_t seed) {
  return make_deeponet(6, 4, {8, 8}, {8, 8}, act, seed);
}

Sample random_sample(const DeepOnetModel& model, uint64_t seed, int n_interior,
                     int n_boundary) {
  CounterRng rng(seed);
  Sample s;
  s.source.sensor_values.resize(model.sensor_count);
  for (double& v : s.source.sensor_values) v = rng.normal();
  s.source.sensors = grid_of(model.sensor_count);
  StencilConfig st;
  for (int i = 0; i < n_interior; ++i)
    s.colloc.interior.push_back({rng.uniform(st.h_tau, 1.0 - st.h_tau),
                                 rng.uniform(-1.0 + st.h_x, 1.0 - st.h_x)});
  for (int i = 0; i < n_boundary; ++i) {
    switch (i % 3) {
      case 0:
        s.colloc.boundary.push_back({0.0, rng.uniform(-1.0, 1.0)});
        break;
      case 1:
        s.colloc.boundary.push_back({rng.uniform(0.0, 1.0), -1.0});
        break;
      default:
        s.colloc.boundary.push_back({rng.uniform(0.0, 1.0), 1.0});
    }
  }
  return s;
}

Vector flatten_grads(const ModelGrads& g) {
  Vector out = flatten(g.branch);
  Vector t = flatten(g.trunk);
  out.insert(out.end(), t.begin(), t.end());
  out.push_back(g.output_bias);
  return out;
}

Vector flatten_model(const DeepOnetModel& m) {
  Vector out = flatten(m.branch);
  Vector t = flatten(m.trunk);
  out.insert(out.end(), t.begin(), t.end());
  out.push_back(m.output_bias);
  return out;
}

void unflatten_model(DeepOnetModel& m, const Vector& flat) {
  size_t nb = flatten(m.branch).size();
  size_t nt = flatten(m.trunk).size();
  unpack_params(m.branch, flat.data());
  unpack_params(m.trunk, flat.data() + nb);
  m.output_bias = flat[nb + nt];
}

}  // namespace

TEST_CASE("diffusion functions: values and derivatives") {
  DiffusionFunction q = DiffusionFunction::quadratic();
  CHECK(q.alpha(3.0) == 9.0);
  CHECK(q.alpha(-3.0) == 9.0);
  CHECK(q.alpha_prime(3.0) == 6.0);
  CHECK(q.alpha_prime(-3.0) == -6.0);

  DiffusionFunction id = DiffusionFunction::identity();
  CHECK(id.alpha(-2.5) == -2.5);
  CHECK(id.alpha_prime(-2.5) == 1.0);

  // power(2) agrees with quadratic on u >= 0 but is odd and monotone.
  DiffusionFunction p2 = DiffusionFunction::power(2.0);
  CHECK(p2.alpha(3.0) == doctest::Approx(9.0));
  CHECK(p2.alpha(-3.0) == doctest::Approx(-9.0));
  CHECK(p2.alpha_prime(-3.0) == doctest::Approx(6.0));

  CHECK(DiffusionFunction::from_string("identity").name() == "identity");
  CHECK(DiffusionFunction::from_string("power", 1.5).exponent == 1.5);
  CHECK_THROWS_AS(DiffusionFunction::from_string("cubic"), ConfigError);
}

TEST_CASE("diffusion derivative matches finite differences") {
  CounterRng rng(8);
  for (DiffusionFunction a : {DiffusionFunction::quadratic(),
                              DiffusionFunction::identity(),
                              DiffusionFunction::power(2.0),
                              DiffusionFunction::power(3.0)}) {
    for (int t = 0; t < 20; ++t) {
      double u = rng.uniform(-2.0, 2.0);
      if (std::fabs(u) < 0.05) continue;  // |u|^{p-1} kink at zero
      double h = 1e-6;
      double fd = (a.alpha(u + h) - a.alpha(u - h)) / (2.0 * h);
      CHECK(a.alpha_prime(u) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("stencil oracle: linear-in-time field has residual exactly 1") {
  // G = tau: D_tau is exact for linear functions and D_xx alpha(G) vanishes
  // because the field is constant in x.
  auto field = [](double tau, double) { return tau; };
  StencilConfig st;
  for (DiffusionFunction a :
       {DiffusionFunction::quadratic(), DiffusionFunction::identity()}) {
    CHECK(residual_of_field(field, {0.5, 0.3}, a, st) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("stencil oracle: identity diffusion on a quadratic field") {
  // G = x^2, alpha = id: D_xx x^2 = 2 exactly; D_tau = 0. Residual = -2.
  auto field = [](double, double x) { return x * x; };
  StencilConfig st;
  CHECK(residual_of_field(field, {0.5, 0.1}, DiffusionFunction::identity(), st) ==
        doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("stencil oracle: manufactured quadratic-diffusion residual") {
  // G = tau cos(pi x / 2), alpha = u^2:
  //   exact residual = cos(pi x/2) + (pi^2/2) tau^2 cos(pi x).
  auto field = [](double tau, double x) { return tau * std::cos(kPi * x / 2.0); };
  auto exact = [](double tau, double x) {
    return std::cos(kPi * x / 2.0) +
           (kPi * kPi / 2.0) * tau * tau * std::cos(kPi * x);
  };
  DiffusionFunction a = DiffusionFunction::quadratic();
  StencilConfig fine{1e-3, 1e-3};
  CounterRng rng(41);
  for (int t = 0; t < 25; ++t) {
    double tau = rng.uniform(0.1, 0.9);
    double x = rng.uniform(-0.9, 0.9);
    CHECK(residual_of_field(field, {tau, x}, a, fine) ==
          doctest::Approx(exact(tau, x)).epsilon(1e-3));
  }
}

TEST_CASE("stencil converges at second order in h") {
  auto field = [](double tau, double x) { return tau * std::cos(kPi * x / 2.0); };
  auto exact = [](double tau, double x) {
    return std::cos(kPi * x / 2.0) +
           (kPi * kPi / 2.0) * tau * tau * std::cos(kPi * x);
  };
  DiffusionFunction a = DiffusionFunction::quadratic();
  QueryPoint y{0.6, 0.25};
  double e1 = std::fabs(residual_of_field(field, y, a, {2e-2, 2e-2}) - exact(y.tau, y.x));
  double e2 = std::fabs(residual_of_field(field, y, a, {1e-2, 1e-2}) - exact(y.tau, y.x));
  double e3 = std::fabs(residual_of_field(field, y, a, {5e-3, 5e-3}) - exact(y.tau, y.x));
  CHECK(std::log2(e1 / e2) > 1.9);
  CHECK(std::log2(e2 / e3) > 1.9);
}

TEST_CASE("model residual: constant output has zero residual") {
  DeepOnetModel m = constant_model(6, 2.0);
  SourceFunction g = constant_source(6, 0.0);
  CHECK(residual(m, g, {0.5, 0.0}, DiffusionFunction::quadratic(), {}) == 0.0);
}

TEST_CASE("model residual matches the injected-field stencil") {
  DeepOnetModel m = small_model(Activation::tanh, 12);
  Sample s = random_sample(m, 3, 1, 0);
  auto field = [&](double tau, double x) {
    return operator_eval(m, s.source, {tau, x});
  };
  DiffusionFunction a = DiffusionFunction::quadratic();
  StencilConfig st;
  QueryPoint y = s.colloc.interior[0];
  CHECK(residual(m, s.source, y, a, st) ==
        doctest::Approx(residual_of_field(field, y, a, st)).epsilon(1e-12));
}

TEST_CASE("residual rejects points too close to the boundary") {
  DeepOnetModel m = constant_model(6, 1.0);
  SourceFunction g = constant_source(6, 0.0);
  DiffusionFunction a = DiffusionFunction::quadratic();
  StencilConfig st;  // h = 1e-2
  CHECK_THROWS_AS(residual(m, g, {0.005, 0.0}, a, st), MarginError);
  CHECK_THROWS_AS(residual(m, g, {0.5, 0.995}, a, st), MarginError);
  CHECK_THROWS_AS(residual(m, g, {0.998, 0.0}, a, st), MarginError);
}

TEST_CASE("loss values on a constant model (hand computation)") {
  // G == b0 everywhere: residual = 0, boundary value = b0.
  DiffusionFunction a = DiffusionFunction::quadratic();
  StencilConfig st;
  auto make_samples = [&](double b0, double g_value) {
    DeepOnetModel m = constant_model(6, b0);
    Sample s;
    s.source = constant_source(6, g_value);
    s.colloc.interior = {{0.3, 0.0}, {0.7, 0.5}};
    s.colloc.boundary = {{0.0, 0.2}, {0.4, 1.0}, {0.9, -1.0}};
    return std::pair{m, std::vector<Sample>{s}};
  };

  auto [m0, s0] = make_samples(2.0, 0.0);
  CHECK(physics_loss(m0, s0, a, st) == 0.0);       // residual 0, g 0
  CHECK(operator_loss(m0, s0) == 4.0);             // mean of b0^2
  CHECK(total_loss(m0, s0, a, st) == 4.0);

  auto [m1, s1] = make_samples(3.0, 2.0);
  CHECK(physics_loss(m1, s1, a, st) == 4.0);       // (0 - 2)^2
  CHECK(operator_loss(m1, s1) == 9.0);
  CHECK(total_loss(m1, s1, a, st) == 13.0);
}

TEST_CASE("loss contracts: empty input and off-boundary points") {
  DeepOnetModel m = constant_model(6, 1.0);
  DiffusionFunction a = DiffusionFunction::quadratic();
  std::vector<Sample> empty;
  CHECK_THROWS_AS(physics_loss(m, empty, a, {}), ContractError);
  CHECK_THROWS_AS(operator_loss(m, empty), ContractError);

  Sample s;
  s.source = constant_source(6, 0.0);
  s.colloc.boundary = {{0.5, 0.5}};  // interior point posing as boundary
  std::vector<Sample> bad{s};
  CHECK_THROWS_AS(operator_loss(m, bad), ContractError);
}

TEST_CASE("b0 gradient on a boundary-only slice is 2 b0") {
  // Zero-weight model: G = b0 at every boundary point, so
  // d/d b0 of mean(G^2) = 2 b0, and all net gradients vanish with the
  // branch embedding.
  DeepOnetModel m = constant_model(6, 1.5);
  Sample s;
  s.source = constant_source(6, 0.0);
  s.colloc.boundary = {{0.0, -0.3}, {0.2, 1.0}};
  std::vector<Sample> samples{s};
  DiffusionFunction a = DiffusionFunction::quadratic();
  for (auto* fn : {&loss_gradient, &loss_gradient_reference}) {
    ModelGrads g = (*fn)(m, samples, a, {}, nullptr);
    CHECK(g.output_bias == doctest::Approx(3.0).epsilon(1e-14));
    for (double v : flatten(g.trunk)) CHECK(v == 0.0);
  }
}

TEST_CASE("fast kernel and serial reference agree within roundoff") {
  DiffusionFunction alphas[] = {DiffusionFunction::quadratic(),
                                DiffusionFunction::identity(),
                                DiffusionFunction::power(2.0)};
  StencilConfig st;
  for (Activation act : {Activation::tanh, Activation::relu}) {
    for (const DiffusionFunction& a : alphas) {
      DeepOnetModel m = small_model(act, 31);
      m.output_bias = 0.1;
      std::vector<Sample> samples;
      for (int f = 0; f < 3; ++f) samples.push_back(random_sample(m, 50 + f, 5, 4));
      LossBreakdown lk, lr;
      ModelGrads gk = loss_gradient(m, samples, a, st, &lk);
      ModelGrads gr = loss_gradient_reference(m, samples, a, st, &lr);
      // Near-zero entries carry accumulation-order roundoff, so compare with
      // an absolute tolerance scaled by the gradient's inf-norm.
      Vector vk = flatten_grads(gk), vr = flatten_grads(gr);
      double norm = 0.0, worst = 0.0;
      for (size_t i = 0; i < vr.size(); ++i) {
        norm = std::max(norm, std::fabs(vr[i]));
        worst = std::max(worst, std::fabs(vk[i] - vr[i]));
      }
      CHECK(worst < 1e-9 * std::max(1.0, norm));
      CHECK(lk.physics == doctest::Approx(lr.physics).epsilon(1e-10));
      CHECK(lk.operator_ == doctest::Approx(lr.operator_).epsilon(1e-10));
      CHECK(lk.total == doctest::Approx(lk.physics + lk.operator_).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient matches finite differences on a small tanh model") {
  DeepOnetModel m = small_model(Activation::tanh, 77);
  m.output_bias = -0.2;
  DiffusionFunction a = DiffusionFunction::quadratic();
  StencilConfig st;
  std::vector<Sample> samples{random_sample(m, 9, 4, 3)};

  ModelGrads g = loss_gradient(m, samples, a, st);
  Vector got = flatten_grads(g);

  DeepOnetModel probe = m;
  Vector flat = flatten_model(m);
  Vector fd(flat.size());
  const double h = 1e-6;
  for (size_t i = 0; i < flat.size(); ++i) {
    double keep = flat[i];
    flat[i] = keep + h;
    unflatten_model(probe, flat);
    double up = total_loss(probe, samples, a, st);
    flat[i] = keep - h;
    unflatten_model(probe, flat);
    double down = total_loss(probe, samples, a, st);
    flat[i] = keep;
    fd[i] = (up - down) / (2.0 * h);
  }
  CHECK(test::max_rel_error(got, fd, 1e-4) < 1e-3);
}

TEST_CASE("reported loss matches the forward-only evaluation") {
  DeepOnetModel m = small_model(Activation::relu, 5);
  DiffusionFunction a = DiffusionFunction::quadratic();
  StencilConfig st;
  std::vector<Sample> samples{random_sample(m, 1, 6, 5),
                              random_sample(m, 2, 6, 5)};
  LossBreakdown lk;
  loss_gradient(m, samples, a, st, &lk);
  CHECK(lk.physics == doctest::Approx(physics_loss(m, samples, a, st)).epsilon(1e-12));
  CHECK(lk.operator_ == doctest::Approx(operator_loss(m, samples)).epsilon(1e-12));
}

TEST_CASE("gradient is deterministic across repeated calls") {
  DeepOnetModel m = small_model(Activation::tanh, 6);
  DiffusionFunction a = DiffusionFunction::power(2.0);
  std::vector<Sample> samples{random_sample(m, 4, 8, 6)};
  ModelGrads g1 = loss_gradient(m, samples, a, {});
  ModelGrads g2 = loss_gradient(m, samples, a, {});
  CHECK(flatten_grads(g1) == flatten_grads(g2));
}

TEST_CASE("one gradient step in the steepest-descent direction reduces loss") {
  DeepOnetModel m = small_model(Activation::tanh, 63);
  DiffusionFunction a = DiffusionFunction::quadratic();
  StencilConfig st;
  std::vector<Sample> samples{random_sample(m, 11, 6, 5)};
  LossBreakdown before;
  ModelGrads g = loss_gradient(m, samples, a, st, &before);
  Vector flat = flatten_model(m);
  Vector dir = flatten_grads(g);
  double step = 1e-4;
  for (size_t i = 0; i < flat.size(); ++i) flat[i] -= step * dir[i];
  DeepOnetModel moved = m;
  unflatten_model(moved, flat);
  CHECK(total_loss(moved, samples, a, st) < before.total);
}

TEST_CASE("non-finite parameters poison the gradient with the function index") {
  DeepOnetModel m = small_model(Activation::tanh, 2);
  m.branch.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  std::vector<Sample> samples{random_sample(m, 1, 2, 2)};
  DiffusionFunction a = DiffusionFunction::quadratic();
  CHECK_THROWS_AS(loss_gradient(m, samples, a, {}), PoisonedGradientError);
  CHECK_THROWS_AS(loss_gradient_reference(m, samples, a, {}), PoisonedGradientError);
  try {
    loss_gradient(m, samples, a, {});
  } catch (const PoisonedGradientError& e) {
    CHECK(std::string(e.what()).find("function") != std::string::npos);
  }
}

TEST_CASE("gradient contract: a slice with no points at all is rejected") {
  DeepOnetModel m = small_model(Activation::tanh, 2);
  Sample s;
  s.source = constant_source(6, 0.0);  // no interior and no boundary points
  std::vector<Sample> samples{s};
  DiffusionFunction a = DiffusionFunction::quadratic();
  CHECK_THROWS_AS(loss_gradient(m, samples, a, {}), ContractError);
  CHECK_THROWS_AS(loss_gradient_reference(m, samples, a, {}), ContractError);
}
