#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pdeop/deeponet.hpp"
#include "pdeop/rng.hpp"

using namespace pdeop;

namespace {

std::shared_ptr<SensorGrid> grid_of(int m) {
  return std::make_shared<SensorGrid>(SensorGrid::uniform(m, 1.0));
}

SourceFunction random_source(std::shared_ptr<SensorGrid> g, uint64_t seed) {
  CounterRng rng(seed);
  SourceFunction f;
  f.sensor_values.resize(g->size());
  for (double& v : f.sensor_values) v = rng.normal();
  f.sensors = std::move(g);
  return f;
}

}  // namespace

TEST_CASE("branch: zero input with zero biases gives zero embedding") {
  DeepOnetModel m = make_deeponet(10, 4, {8}, {8}, Activation::relu, 1);
  auto g = grid_of(10);
  SourceFunction zero{Vector(10, 0.0), g};
  for (double v : branch_forward(m, zero)) CHECK(v == 0.0);
}

TEST_CASE("branch: output scale is linear in c") {
  DeepOnetModel m1 = make_deeponet(6, 3, {5}, {5}, Activation::tanh, 2, {}, 1.0);
  DeepOnetModel m2 = m1;
  m2.output_scale = 2.0;
  SourceFunction f = random_source(grid_of(6), 9);
  Vector e1 = branch_forward(m1, f);
  Vector e2 = branch_forward(m2, f);
  REQUIRE(e1.size() == 3);
  for (size_t i = 0; i < e1.size(); ++i) CHECK(e2[i] == doctest::Approx(2.0 * e1[i]));
}

TEST_CASE("branch: sensor count mismatch is a shape error") {
  DeepOnetModel m = make_deeponet(6, 3, {5}, {5}, Activation::tanh, 2);
  SourceFunction f = random_source(grid_of(7), 9);
  CHECK_THROWS_AS(branch_forward(m, f), ShapeError);
}

TEST_CASE("trunk: zero weights give zero vector, output length q") {
  DeepOnetModel m = make_deeponet(5, 7, {4}, {4}, Activation::relu, 3);
  for (auto& w : m.trunk.weights) w.fill(0.0);
  Vector t = trunk_forward(m, {0.3, -0.2});
  REQUIRE(t.size() == 7);
  for (double v : t) CHECK(v == 0.0);
  CHECK(trunk_forward(m, {0.5, 0.1}) == trunk_forward(m, {0.5, 0.1}));
}

TEST_CASE("operator readout is a dot product plus bias") {
  // Single-layer nets with zero weights: outputs come from the biases alone.
  DeepOnetModel m;
  m.sensor_count = 4;
  m.embedding_dim = 2;
  m.branch = mlp_init({{4, 2}, Activation::relu, 0});
  m.trunk = mlp_init({{2, 2}, Activation::relu, 0});
  m.branch.weights[0].fill(0.0);
  m.trunk.weights[0].fill(0.0);
  m.branch.biases[0] = {1.0, 2.0};
  m.trunk.biases[0] = {3.0, 4.0};
  SourceFunction f{Vector(4, 0.0), grid_of(4)};
  CHECK(operator_eval(m, f, {0.5, 0.0}) == 11.0);
  m.output_bias = -1.5;
  CHECK(operator_eval(m, f, {0.5, 0.0}) == 9.5);
  // zero branch embedding -> b0
  m.branch.biases[0] = {0.0, 0.0};
  CHECK(operator_eval(m, f, {0.2, 0.1}) == -1.5);
}

TEST_CASE("grid evaluation matches single evaluations bit-for-bit") {
  DeepOnetModel m = make_deeponet(8, 6, {10}, {10}, Activation::tanh, 4);
  SourceFunction f = random_source(grid_of(8), 21);
  Vector taus{0.1, 0.4, 0.9};
  Vector xs{-0.8, 0.0, 0.3, 0.7};
  Matrix grid = operator_eval_grid(m, f, taus, xs);
  REQUIRE(grid.rows == 3);
  REQUIRE(grid.cols == 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(grid(i, j) == operator_eval(m, f, {taus[i], xs[j]}));
}

TEST_CASE("1x1 grid equals operator_eval; out-of-domain rejected") {
  DeepOnetModel m = make_deeponet(8, 6, {10}, {10}, Activation::relu, 5);
  SourceFunction f = random_source(grid_of(8), 2);
  Vector tau{0.25}, x{0.5};
  CHECK(operator_eval_grid(m, f, tau, x)(0, 0) == operator_eval(m, f, {0.25, 0.5}));
  Vector bad{1.5};
  CHECK_THROWS_AS(operator_eval_grid(m, f, bad, x), DomainError);
  CHECK_THROWS_AS(operator_eval_grid(m, f, tau, bad), DomainError);
}

TEST_CASE("trunk embeddings at fixed y do not depend on g") {
  DeepOnetModel m = make_deeponet(8, 6, {10}, {10}, Activation::tanh, 6);
  QueryPoint y{0.6, -0.3};
  Vector t1 = trunk_forward(m, y);
  // operator value changes with g, trunk features do not
  SourceFunction f1 = random_source(grid_of(8), 31);
  SourceFunction f2 = random_source(grid_of(8), 32);
  CHECK(operator_eval(m, f1, y) != operator_eval(m, f2, y));
  CHECK(trunk_forward(m, y) == t1);
}

TEST_CASE("scaling c by kappa scales outputs minus b0 by kappa") {
  DeepOnetModel m = make_deeponet(8, 6, {10}, {10}, Activation::tanh, 7);
  m.output_bias = 0.4;
  SourceFunction f = random_source(grid_of(8), 77);
  QueryPoint y{0.3, 0.2};
  double v1 = operator_eval(m, f, y);
  DeepOnetModel m3 = m;
  m3.output_scale = 3.0;
  double v3 = operator_eval(m3, f, y);
  CHECK(v3 - m.output_bias == doctest::Approx(3.0 * (v1 - m.output_bias)).epsilon(1e-12));
}

TEST_CASE("non-unit domains rescale trunk inputs to [-1,1]^2") {
  Domain d{2.0, 3.0};
  DeepOnetModel m = make_deeponet(4, 3, {5}, {5}, Activation::tanh, 8, d);
  double in[2];
  m.trunk_input({0.0, -3.0}, in);
  CHECK(in[0] == -1.0);
  CHECK(in[1] == -1.0);
  m.trunk_input({2.0, 3.0}, in);
  CHECK(in[0] == 1.0);
  CHECK(in[1] == 1.0);
  // unit domain stays raw
  DeepOnetModel u = make_deeponet(4, 3, {5}, {5}, Activation::tanh, 8);
  u.trunk_input({0.25, 0.5}, in);
  CHECK(in[0] == 0.25);
  CHECK(in[1] == 0.5);
}
