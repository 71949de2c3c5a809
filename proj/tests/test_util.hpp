#pragma once

#include <cmath>
#include <functional>

#include "pdeop/nnet.hpp"
#include "pdeop/rng.hpp"

namespace pdeop::test {

/// Central finite differences of a scalar loss with respect to every
/// parameter entry, through the flat packing.
inline Vector fd_gradient(const MlpParams& params,
                          const std::function<double(const MlpParams&)>& loss,
                          double step = 1e-5) {
  MlpParams p = params;
  Vector flat = flatten(p);
  Vector grad(flat.size());
  for (size_t i = 0; i < flat.size(); ++i) {
    double keep = flat[i];
    flat[i] = keep + step;
    unpack_params(p, flat.data());
    double up = loss(p);
    flat[i] = keep - step;
    unpack_params(p, flat.data());
    double down = loss(p);
    flat[i] = keep;
    grad[i] = (up - down) / (2.0 * step);
  }
  unpack_params(p, flat.data());
  return grad;
}

/// Max relative deviation, entrywise, with a floor that keeps finite-difference
/// noise on near-zero entries from dominating.
inline double max_rel_error(const Vector& got, const Vector& want, double floor = 1e-6) {
  double worst = 0.0;
  for (size_t i = 0; i < got.size(); ++i) {
    double denom = std::max(std::fabs(want[i]), floor);
    worst = std::max(worst, std::fabs(got[i] - want[i]) / denom);
  }
  return worst;
}

inline MlpParams random_params(const std::vector<int>& sizes, Activation act,
                               uint64_t seed) {
  return mlp_init({sizes, act, seed});
}

}  // namespace pdeop::test
