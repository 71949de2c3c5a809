#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "pdeop/tensor.hpp"

namespace pdeop {

struct GpConfig {
  double variance = 1.0;       // kernel amplitude sigma_f^2
  double length_scale = 0.2;
  double jitter = 1e-10;       // initial ridge added to the kernel diagonal
  double jitter_growth = 10.0;
  double jitter_max = 1e-4;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotPositiveDefiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// m uniformly spaced sensor positions over [-L, L], endpoints included.
struct SensorGrid {
  std::vector<double> positions;

  static SensorGrid uniform(int m, double half_width);
  int size() const { return static_cast<int>(positions.size()); }
  double half_width() const { return positions.back(); }
};

/// A source term g held as values at the sensors, piecewise-linear off-sensor.
struct SourceFunction {
  std::vector<double> sensor_values;
  std::shared_ptr<const SensorGrid> sensors;

  /// Linear interpolation; exact at sensor positions. Throws DomainError
  /// outside [-L, L].
  double eval(double x) const;
};

/// K[i][j] = variance * exp(-(x_i - x_j)^2 / (2 l^2)).
Matrix kernel_matrix(const SensorGrid& grid, const GpConfig& cfg);

/// Lower-triangular L with L L^T = K + lambda I, lambda walked up the jitter
/// ladder until the factorization succeeds. The lambda actually used is
/// reported through lambda_out when non-null.
Matrix cholesky_jittered(const Matrix& K, const GpConfig& cfg,
                         double* lambda_out = nullptr);

/// sensor_values = L z, z ~ N(0, I) from the counter-based generator.
SourceFunction sample_source(const Matrix& chol_factor,
                             std::shared_ptr<const SensorGrid> grid, uint64_t seed);

}  // namespace pdeop
