#include "pdeop/gp.hpp"

#include <algorithm>
#include <cmath>

#include "pdeop/rng.hpp"

namespace pdeop {

SensorGrid SensorGrid::uniform(int m, double half_width) {
  if (m < 2) throw DomainError("sensor grid needs m >= 2");
  if (half_width <= 0) throw DomainError("sensor grid needs L > 0");
  SensorGrid g;
  g.positions.resize(m);
  for (int i = 0; i < m; ++i)
    g.positions[i] = -half_width + 2.0 * half_width * i / (m - 1);
  g.positions.front() = -half_width;
  g.positions.back() = half_width;
  return g;
}

double SourceFunction::eval(double x) const {
  const auto& xs = sensors->positions;
  if (x < xs.front() || x > xs.back())
    throw DomainError("source eval outside [-L, L]: x = " + std::to_string(x));
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return sensor_values.back();
  if (it == xs.begin()) return sensor_values.front();
  size_t hi = it - xs.begin();
  size_t lo = hi - 1;
  double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return (1.0 - t) * sensor_values[lo] + t * sensor_values[hi];
}

Matrix kernel_matrix(const SensorGrid& grid, const GpConfig& cfg) {
  if (cfg.length_scale <= 0) throw DomainError("length_scale must be > 0");
  int m = grid.size();
  Matrix k(m, m);
  double inv = 1.0 / (2.0 * cfg.length_scale * cfg.length_scale);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double d = grid.positions[i] - grid.positions[j];
      k(i, j) = cfg.variance * std::exp(-d * d * inv);
    }
  return k;
}

namespace {

// Plain lower Cholesky; returns false on a non-positive pivot.
bool cholesky(const Matrix& a, Matrix& l) {
  int n = a.rows;
  l = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return true;
}

}  // namespace

Matrix cholesky_jittered(const Matrix& k, const GpConfig& cfg, double* lambda_out) {
  if (k.rows != k.cols) throw DomainError("cholesky_jittered: matrix not square");
  Matrix l;
  double lambda = cfg.jitter;
  while (true) {
    Matrix kj = k;
    for (int i = 0; i < k.rows; ++i) kj(i, i) += lambda;
    if (cholesky(kj, l)) {
      if (lambda_out) *lambda_out = lambda;
      return l;
    }
    if (lambda >= cfg.jitter_max)
      throw NotPositiveDefiniteError(
          "cholesky_jittered: factorization failed at max jitter " +
          std::to_string(cfg.jitter_max));
    lambda = std::min(lambda * cfg.jitter_growth, cfg.jitter_max);
  }
}

SourceFunction sample_source(const Matrix& chol_factor,
                             std::shared_ptr<const SensorGrid> grid, uint64_t seed) {
  int m = grid->size();
  CounterRng rng(derive_seed(seed, /*tag=*/0x67707372));
  Vector z(m);
  for (double& v : z) v = rng.normal();
  SourceFunction g;
  g.sensors = std::move(grid);
  g.sensor_values.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += chol_factor(i, j) * z[j];
    g.sensor_values[i] = s;
  }
  return g;
}

}  // namespace pdeop
