#pragma once

#include <functional>
#include <span>
#include <stdexcept>

#include "pdeop/deeponet.hpp"
#include "pdeop/physics.hpp"

namespace pdeop {

struct FdmConfig {
  int nx = 199;  // interior spatial nodes; dx = 2L/(nx+1)
  int nt = 200;  // time steps; dt = T/nt
  double newton_tol = 1e-10;  // max-norm of the Newton update
  int newton_max_iters = 50;
};

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonconvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// phi on the full space-time grid: (nt+1) rows x (nx+2) columns including the
/// boundary columns (identically zero).
struct FdmSolution {
  Matrix values;
  double dx = 0.0;
  double dt = 0.0;
  Domain domain;

  /// Bilinear interpolation; exact at grid nodes. Throws DomainError outside
  /// the closed domain.
  double interpolate(double tau, double x) const;
};

/// Thomas elimination. sub/sup have length n-1.
Vector tridiag_solve(std::span<const double> sub, std::span<const double> diag,
                     std::span<const double> sup, std::span<const double> rhs);

/// Backward-Euler + Newton solve of d_tau phi - d_xx alpha(phi) = g with zero
/// initial/boundary conditions. A nonconvergent step is retried once as two
/// half steps; a second failure raises NonconvergenceError.
FdmSolution solve_fdm(const SourceFunction& g, Domain domain, const FdmConfig& cfg,
                      const DiffusionFunction& alpha);

/// Same scheme with time-dependent forcing evaluated at the target time level.
FdmSolution solve_fdm_forced(const std::function<double(double, double)>& g_field,
                             Domain domain, const FdmConfig& cfg,
                             const DiffusionFunction& alpha);

}  // namespace pdeop
