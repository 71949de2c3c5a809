// Benchmark: OpenMP loss-gradient kernel vs the serial tape-based reference.
// Also reports the max relative deviation between the two, since the whole
// point of keeping the reference around is to cross-check the fast path.
//
// Usage: bench_gradient [n_functions] [q] [width] [interior] [boundary] [reps]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "pdeop/physics.hpp"
#include "pdeop/rng.hpp"

using namespace pdeop;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Vector flatten_grads(const ModelGrads& g) {
  Vector out = flatten(g.branch);
  Vector t = flatten(g.trunk);
  out.insert(out.end(), t.begin(), t.end());
  out.push_back(g.output_bias);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const int n_functions = argc > 1 ? std::atoi(argv[1]) : 32;
  const int q = argc > 2 ? std::atoi(argv[2]) : 32;
  const int width = argc > 3 ? std::atoi(argv[3]) : 32;
  const int interior = argc > 4 ? std::atoi(argv[4]) : 50;
  const int boundary = argc > 5 ? std::atoi(argv[5]) : 50;
  const int reps = argc > 6 ? std::atoi(argv[6]) : 5;
  const int m = 50;

  DeepOnetModel model =
      make_deeponet(m, q, {width, width}, {width, width}, Activation::tanh, 1);
  auto grid = std::make_shared<SensorGrid>(SensorGrid::uniform(m, 1.0));
  StencilConfig st;
  CounterRng rng(7);
  std::vector<Sample> samples(n_functions);
  for (Sample& s : samples) {
    s.source.sensor_values.resize(m);
    for (double& v : s.source.sensor_values) v = rng.normal();
    s.source.sensors = grid;
    for (int i = 0; i < interior; ++i)
      s.colloc.interior.push_back({rng.uniform(st.h_tau, 1.0 - st.h_tau),
                                   rng.uniform(-1.0 + st.h_x, 1.0 - st.h_x)});
    for (int i = 0; i < boundary; ++i)
      s.colloc.boundary.push_back({0.0, rng.uniform(-1.0, 1.0)});
  }
  DiffusionFunction alpha = DiffusionFunction::quadratic();

  printf("functions=%d q=%d width=%d interior=%d boundary=%d threads=%d\n",
         n_functions, q, width, interior, boundary, omp_get_max_threads());

  // warm-up + correctness cross-check
  ModelGrads fast = loss_gradient(model, samples, alpha, st);
  ModelGrads ref = loss_gradient_reference(model, samples, alpha, st);
  Vector ff = flatten_grads(fast), fr = flatten_grads(ref);
  double worst = 0.0;
  for (size_t i = 0; i < ff.size(); ++i) {
    double denom = std::fmax(std::fabs(fr[i]), 1e-10);
    worst = std::fmax(worst, std::fabs(ff[i] - fr[i]) / denom);
  }
  printf("max relative deviation fast vs reference: %.3e\n", worst);

  double t0 = now_seconds();
  for (int r = 0; r < reps; ++r) loss_gradient(model, samples, alpha, st);
  double t_fast = (now_seconds() - t0) / reps;

  t0 = now_seconds();
  for (int r = 0; r < reps; ++r) loss_gradient_reference(model, samples, alpha, st);
  double t_ref = (now_seconds() - t0) / reps;

  printf("openmp kernel:    %9.2f ms/gradient\n", 1e3 * t_fast);
  printf("serial reference: %9.2f ms/gradient\n", 1e3 * t_ref);
  printf("speedup: %.1fx\n", t_ref / t_fast);
  return worst < 1e-8 ? 0 : 1;
}
