#include "pdeop/fdm.hpp"

#include <cmath>

namespace pdeop {

Vector tridiag_solve(std::span<const double> sub, std::span<const double> diag,
                     std::span<const double> sup, std::span<const double> rhs) {
  const size_t n = diag.size();
  if (rhs.size() != n || (n > 0 && (sub.size() != n - 1 || sup.size() != n - 1)))
    throw ShapeError("tridiag_solve: inconsistent band lengths");
  Vector c(n > 0 ? n - 1 : 0), d(n), x(n);
  double piv = diag[0];
  if (piv == 0.0) throw SingularSystemError("tridiag_solve: zero pivot at row 0");
  if (n > 1) c[0] = sup[0] / piv;
  d[0] = rhs[0] / piv;
  for (size_t i = 1; i < n; ++i) {
    piv = diag[i] - sub[i - 1] * c[i - 1];
    if (piv == 0.0)
      throw SingularSystemError("tridiag_solve: zero pivot at row " + std::to_string(i));
    if (i < n - 1) c[i] = sup[i] / piv;
    d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv;
  }
  x[n - 1] = d[n - 1];
  for (size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

namespace {

// One backward-Euler step: solve u - prev - r*(alpha(u_{i+1}) - 2 alpha(u_i)
// + alpha(u_{i-1})) - dt*g_i = 0 on the interior by Newton. Returns false on
// nonconvergence or NaN.
bool implicit_step(const Vector& prev, Vector& u, const Vector& g_dt,
                   double r, const DiffusionFunction& alpha, const FdmConfig& cfg) {
  const int nx = static_cast<int>(prev.size()) - 2;
  u = prev;
  Vector f(nx), dl(nx - 1), dm(nx), du(nx - 1);
  for (int it = 0; it < cfg.newton_max_iters; ++it) {
    for (int i = 1; i <= nx; ++i) {
      f[i - 1] = u[i] - prev[i] -
                 r * (alpha.alpha(u[i + 1]) - 2.0 * alpha.alpha(u[i]) +
                      alpha.alpha(u[i - 1])) -
                 g_dt[i];
      dm[i - 1] = 1.0 + 2.0 * r * alpha.alpha_prime(u[i]);
      if (i > 1) dl[i - 2] = -r * alpha.alpha_prime(u[i - 1]);
      if (i < nx) du[i - 1] = -r * alpha.alpha_prime(u[i + 1]);
    }
    for (double& v : f) v = -v;
    Vector delta;
    try {
      delta = tridiag_solve(dl, dm, du, f);
    } catch (const SingularSystemError&) {
      return false;
    }
    double step = 0.0;
    for (int i = 1; i <= nx; ++i) {
      u[i] += delta[i - 1];
      step = std::max(step, std::fabs(delta[i - 1]));
    }
    if (!std::isfinite(step)) return false;
    if (step < cfg.newton_tol) return true;
  }
  return false;
}

FdmSolution solve_impl(const std::function<double(double, double)>& g_field,
                       Domain domain, const FdmConfig& cfg,
                       const DiffusionFunction& alpha) {
  if (cfg.nx < 3 || cfg.nt < 1) throw ConfigError("fdm: nx >= 3 and nt >= 1 required");
  const int nx = cfg.nx;
  const double dx = 2.0 * domain.half_width / (nx + 1);
  const double dt = domain.time_horizon / cfg.nt;
  const double r = dt / (dx * dx);

  FdmSolution sol;
  sol.values = Matrix(cfg.nt + 1, nx + 2);
  sol.dx = dx;
  sol.dt = dt;
  sol.domain = domain;

  Vector xs(nx + 2);
  for (int i = 0; i < nx + 2; ++i) xs[i] = -domain.half_width + dx * i;

  Vector phi(nx + 2, 0.0), u;
  for (int n = 0; n < cfg.nt; ++n) {
    const double tau_next = dt * (n + 1);
    Vector g_dt(nx + 2, 0.0);
    for (int i = 1; i <= nx; ++i) g_dt[i] = dt * g_field(tau_next, xs[i]);

    if (!implicit_step(phi, u, g_dt, r, alpha, cfg)) {
      // Retry this step once as two half steps.
      Vector g_half(nx + 2, 0.0), mid;
      const double tau_mid = dt * (n + 0.5);
      for (int i = 1; i <= nx; ++i) g_half[i] = 0.5 * dt * g_field(tau_mid, xs[i]);
      bool ok = implicit_step(phi, mid, g_half, 0.5 * r, alpha, cfg);
      if (ok) {
        for (int i = 1; i <= nx; ++i) g_half[i] = 0.5 * dt * g_field(tau_next, xs[i]);
        ok = implicit_step(mid, u, g_half, 0.5 * r, alpha, cfg);
      }
      if (!ok)
        throw NonconvergenceError("fdm: Newton failed to converge at time step " +
                                  std::to_string(n + 1));
    }
    for (double v : u)
      if (!std::isfinite(v))
        throw NonconvergenceError("fdm: divergence (non-finite value) at time step " +
                                  std::to_string(n + 1));
    phi = u;
    std::copy(phi.begin(), phi.end(), sol.values.row(n + 1));
  }
  return sol;
}

}  // namespace

FdmSolution solve_fdm(const SourceFunction& g, Domain domain, const FdmConfig& cfg,
                      const DiffusionFunction& alpha) {
  return solve_impl([&g](double, double x) { return g.eval(x); }, domain, cfg, alpha);
}

FdmSolution solve_fdm_forced(const std::function<double(double, double)>& g_field,
                             Domain domain, const FdmConfig& cfg,
                             const DiffusionFunction& alpha) {
  return solve_impl(g_field, domain, cfg, alpha);
}

double FdmSolution::interpolate(double tau, double x) const {
  const double T = domain.time_horizon, L = domain.half_width;
  const double tol_t = 1e-12 * T, tol_x = 1e-12 * L;
  if (tau < -tol_t || tau > T + tol_t || x < -L - tol_x || x > L + tol_x)
    throw DomainError("fdm interpolate: point outside the closed domain");
  double ti = std::clamp(tau / dt, 0.0, static_cast<double>(values.rows - 1));
  double xi = std::clamp((x + L) / dx, 0.0, static_cast<double>(values.cols - 1));
  int i0 = std::min(static_cast<int>(ti), values.rows - 2);
  int j0 = std::min(static_cast<int>(xi), values.cols - 2);
  double ft = ti - i0, fx = xi - j0;
  return (1 - ft) * (1 - fx) * values(i0, j0) + (1 - ft) * fx * values(i0, j0 + 1) +
         ft * (1 - fx) * values(i0 + 1, j0) + ft * fx * values(i0 + 1, j0 + 1);
}

}  // namespace pdeop
