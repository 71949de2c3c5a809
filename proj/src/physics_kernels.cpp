#include <omp.h>

#include <cmath>

#include "pdeop/physics.hpp"

namespace pdeop {
namespace {

void row_stream_product(const Matrix& a, const Matrix& b, Matrix& c, int n, int k,
                        int m);

// C(n x m) = A(n x k) * B(m x k)^T ; rows of both operands are contiguous.
// B is transposed into scratch first so the inner loop is a streaming
// multiply-add over independent accumulators — vectorizable without
// reassociating any reduction (keeps results bit-deterministic).
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, Matrix& bt_scratch) {
  const int n = a.rows, k = a.cols, m = b.rows;
  bt_scratch = Matrix(k, m);
  for (int j = 0; j < m; ++j) {
    const double* bj = b.row(j);
    for (int l = 0; l < k; ++l) bt_scratch(l, j) = bj[l];
  }
  row_stream_product(a, bt_scratch, c, n, k, m);
}

// Shared core: C(i,:) = sum_l A(i,l) * B(l,:), accumulating four l-terms per
// pass so each C row is loaded/stored once per four multiply-adds. The
// summation order is fixed, so results are bit-deterministic run to run.
void row_stream_product(const Matrix& a, const Matrix& b, Matrix& c, int n, int k,
                        int m) {
  const int k4 = k - k % 4;
  for (int i = 0; i < n; ++i) {
    const double* __restrict__ ai = a.row(i);
    double* __restrict__ ci = c.row(i);
    for (int j = 0; j < m; ++j) ci[j] = 0.0;
    for (int l = 0; l < k4; l += 4) {
      const double v0 = ai[l], v1 = ai[l + 1], v2 = ai[l + 2], v3 = ai[l + 3];
      const double* __restrict__ b0 = b.row(l);
      const double* __restrict__ b1 = b.row(l + 1);
      const double* __restrict__ b2 = b.row(l + 2);
      const double* __restrict__ b3 = b.row(l + 3);
      for (int j = 0; j < m; ++j)
        ci[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
    }
    for (int l = k4; l < k; ++l) {
      const double v = ai[l];
      const double* __restrict__ bl = b.row(l);
      for (int j = 0; j < m; ++j) ci[j] += v * bl[j];
    }
  }
}

// C(n x m) = A(n x k) * B(k x m)
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  row_stream_product(a, b, c, a.rows, a.cols, b.cols);
}

// C(k x m) += A(n x k)^T * B(n x m); four input rows per pass, same
// fixed-order accumulation argument as above.
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const int n = a.rows, k = a.cols, m = b.cols;
  const int n4 = n - n % 4;
  for (int i = 0; i < n4; i += 4) {
    const double* __restrict__ a0 = a.row(i);
    const double* __restrict__ a1 = a.row(i + 1);
    const double* __restrict__ a2 = a.row(i + 2);
    const double* __restrict__ a3 = a.row(i + 3);
    const double* __restrict__ b0 = b.row(i);
    const double* __restrict__ b1 = b.row(i + 1);
    const double* __restrict__ b2 = b.row(i + 2);
    const double* __restrict__ b3 = b.row(i + 3);
    for (int l = 0; l < k; ++l) {
      const double v0 = a0[l], v1 = a1[l], v2 = a2[l], v3 = a3[l];
      if (v0 == 0.0 && v1 == 0.0 && v2 == 0.0 && v3 == 0.0) continue;
      double* __restrict__ cl = c.row(l);
      for (int j = 0; j < m; ++j)
        cl[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
    }
  }
  for (int i = n4; i < n; ++i) {
    const double* __restrict__ ai = a.row(i);
    const double* __restrict__ bi = b.row(i);
    for (int l = 0; l < k; ++l) {
      const double v = ai[l];
      if (v == 0.0) continue;
      double* __restrict__ cl = c.row(l);
      for (int j = 0; j < m; ++j) cl[j] += v * bi[j];
    }
  }
}

struct ForwardCache {
  std::vector<Matrix> acts;  // acts[0] = input rows, acts[l] = post-activation
  Matrix out;                // linear last-layer output
  Matrix scratch;            // weight-transpose scratch for gemm_nt
};

// Batched MLP forward over row-stacked inputs, keeping activations.
void batched_forward(const MlpParams& p, const Matrix& input, ForwardCache& fc) {
  const int last = p.layer_count() - 1;
  fc.acts.assign(1, input);
  Matrix z;
  for (int l = 0; l < last; ++l) {
    z = Matrix(input.rows, p.weights[l].rows);
    gemm_nt(fc.acts.back(), p.weights[l], z, fc.scratch);
    const Vector& b = p.biases[l];
    for (int i = 0; i < z.rows; ++i) {
      double* zr = z.row(i);
      for (int j = 0; j < z.cols; ++j) zr[j] = activate(p.activation, zr[j] + b[j]);
    }
    fc.acts.push_back(std::move(z));
  }
  fc.out = Matrix(input.rows, p.weights[last].rows);
  gemm_nt(fc.acts.back(), p.weights[last], fc.out, fc.scratch);
  const Vector& b = p.biases[last];
  for (int i = 0; i < fc.out.rows; ++i) {
    double* r = fc.out.row(i);
    for (int j = 0; j < fc.out.cols; ++j) r[j] += b[j];
  }
}

// Derivative of the activation expressed through the post-activation value.
inline double act_deriv_from_value(Activation a, double v) {
  return a == Activation::relu ? (v > 0.0 ? 1.0 : 0.0) : 1.0 - v * v;
}

// Backward through the batched forward; accumulates parameter gradients into
// `grads` and returns nothing else.
void batched_backward(const MlpParams& p, const ForwardCache& fc, Matrix& d_out,
                      MlpParams& grads) {
  const int last = p.layer_count() - 1;
  Matrix d = std::move(d_out);
  for (int l = last; l >= 0; --l) {
    // dW_l += d^T * acts[l]; db_l += column sums of d
    gemm_tn_acc(d, fc.acts[l], grads.weights[l]);
    Vector& db = grads.biases[l];
    for (int i = 0; i < d.rows; ++i) {
      const double* dr = d.row(i);
      for (int j = 0; j < d.cols; ++j) db[j] += dr[j];
    }
    if (l == 0) break;
    Matrix d_prev(d.rows, p.weights[l].cols);
    gemm_nn(d, p.weights[l], d_prev);
    const Matrix& a = fc.acts[l];
    for (int i = 0; i < d_prev.rows; ++i) {
      double* r = d_prev.row(i);
      const double* ar = a.row(i);
      for (int j = 0; j < d_prev.cols; ++j)
        r[j] *= act_deriv_from_value(p.activation, ar[j]);
    }
    d = std::move(d_prev);
  }
}

struct FunctionResult {
  double physics_sum = 0.0;
  double operator_sum = 0.0;
};

// Loss contributions and gradient of one source function. Gradients are
// accumulated into `grads` scaled for the 1/sumQ, 1/sumP normalization.
FunctionResult function_pass(const DeepOnetModel& model, const Sample& s,
                             const DiffusionFunction& alpha, const StencilConfig& st,
                             double inv_sum_q, double inv_sum_p, ModelGrads& grads) {
  const int q = model.embedding_dim;
  const int nq = static_cast<int>(s.colloc.interior.size());
  const int np = static_cast<int>(s.colloc.boundary.size());
  const int rows = 5 * nq + np;

  // Branch forward (single row), scaled embedding.
  Matrix bin(1, model.sensor_count);
  std::copy(s.source.sensor_values.begin(), s.source.sensor_values.end(), bin.row(0));
  ForwardCache bfc;
  batched_forward(model.branch, bin, bfc);
  Vector bemb(q);
  for (int k = 0; k < q; ++k) bemb[k] = model.output_scale * bfc.out(0, k);

  // Trunk inputs: five stencil rows per interior point, then boundary rows.
  Matrix tin(rows, 2);
  auto put = [&](int r, QueryPoint y) {
    double in[2];
    model.trunk_input(y, in);
    tin(r, 0) = in[0];
    tin(r, 1) = in[1];
  };
  for (int j = 0; j < nq; ++j) {
    QueryPoint y = s.colloc.interior[j];
    check_margin(model, y, st);
    put(5 * j + 0, y);
    put(5 * j + 1, {y.tau + st.h_tau, y.x});
    put(5 * j + 2, {y.tau - st.h_tau, y.x});
    put(5 * j + 3, {y.tau, y.x + st.h_x});
    put(5 * j + 4, {y.tau, y.x - st.h_x});
  }
  for (int k = 0; k < np; ++k) {
    check_on_boundary(model, s.colloc.boundary[k]);
    put(5 * nq + k, s.colloc.boundary[k]);
  }

  ForwardCache tfc;
  batched_forward(model.trunk, tin, tfc);

  // Operator values G = E . bemb + b0 per row.
  Vector g_val(rows);
  for (int r = 0; r < rows; ++r) {
    const double* er = tfc.out.row(r);
    double acc = model.output_bias;
    for (int k = 0; k < q; ++k) acc += er[k] * bemb[k];
    g_val[r] = acc;
  }

  // Loss terms and dL/dG per row.
  FunctionResult res;
  Vector d_g(rows, 0.0);
  const double inv_2ht = 1.0 / (2.0 * st.h_tau);
  const double inv_hx2 = 1.0 / (st.h_x * st.h_x);
  for (int j = 0; j < nq; ++j) {
    const int b = 5 * j;
    double gc = g_val[b], gtp = g_val[b + 1], gtm = g_val[b + 2];
    double gxp = g_val[b + 3], gxm = g_val[b + 4];
    double r = (gtp - gtm) * inv_2ht -
               (alpha.alpha(gxp) - 2.0 * alpha.alpha(gc) + alpha.alpha(gxm)) * inv_hx2;
    double e = r - s.source.eval(s.colloc.interior[j].x);
    res.physics_sum += e * e;
    double sgn = 2.0 * e * inv_sum_q;
    d_g[b + 1] += sgn * inv_2ht;
    d_g[b + 2] -= sgn * inv_2ht;
    d_g[b + 3] -= sgn * alpha.alpha_prime(gxp) * inv_hx2;
    d_g[b] += 2.0 * sgn * alpha.alpha_prime(gc) * inv_hx2;
    d_g[b + 4] -= sgn * alpha.alpha_prime(gxm) * inv_hx2;
  }
  for (int k = 0; k < np; ++k) {
    double v = g_val[5 * nq + k];
    res.operator_sum += v * v;
    d_g[5 * nq + k] = 2.0 * v * inv_sum_p;
  }

  // Readout backward: dE = d_g x bemb, d_bemb = E^T d_g, db0 = sum d_g.
  Matrix d_e(rows, q);
  Vector d_bemb(q, 0.0);
  double d_b0 = 0.0;
  for (int r = 0; r < rows; ++r) {
    const double dg = d_g[r];
    d_b0 += dg;
    double* der = d_e.row(r);
    const double* er = tfc.out.row(r);
    for (int k = 0; k < q; ++k) {
      der[k] = dg * bemb[k];
      d_bemb[k] += dg * er[k];
    }
  }
  grads.output_bias += d_b0;

  batched_backward(model.trunk, tfc, d_e, grads.trunk);

  Matrix d_u(1, q);
  for (int k = 0; k < q; ++k) d_u(0, k) = model.output_scale * d_bemb[k];
  batched_backward(model.branch, bfc, d_u, grads.branch);

  return res;
}

}  // namespace

ModelGrads loss_gradient(const DeepOnetModel& model, std::span<const Sample> samples,
                         const DiffusionFunction& alpha, const StencilConfig& st,
                         LossBreakdown* losses) {
  if (samples.empty()) throw ContractError("loss_gradient: empty dataset");
  size_t sum_q = 0, sum_p = 0;
  for (const Sample& s : samples) {
    sum_q += s.colloc.interior.size();
    sum_p += s.colloc.boundary.size();
  }
  if (sum_q == 0 && sum_p == 0)
    throw ContractError("loss_gradient: dataset has no collocation points");
  const double inv_sum_q = sum_q ? 1.0 / static_cast<double>(sum_q) : 0.0;
  const double inv_sum_p = sum_p ? 1.0 / static_cast<double>(sum_p) : 0.0;

  const int n_threads = omp_get_max_threads();
  std::vector<ModelGrads> partial(n_threads);
  std::vector<double> phys(n_threads, 0.0), oper(n_threads, 0.0);
  for (auto& g : partial) {
    g.branch = zeros_like(model.branch);
    g.trunk = zeros_like(model.trunk);
  }
  int poisoned = -1;

#pragma omp parallel for schedule(static)
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    int t = omp_get_thread_num();
    FunctionResult r = function_pass(model, samples[i], alpha, st, inv_sum_q,
                                     inv_sum_p, partial[t]);
    if (std::isnan(r.physics_sum) || std::isnan(r.operator_sum)) {
#pragma omp critical
      if (poisoned < 0 || i < poisoned) poisoned = i;
    }
    phys[t] += r.physics_sum;
    oper[t] += r.operator_sum;
  }
  if (poisoned >= 0)
    throw PoisonedGradientError("loss_gradient: NaN loss from function index " +
                                std::to_string(poisoned));

  // Deterministic reduction: thread-index order.
  ModelGrads total = std::move(partial[0]);
  double phys_sum = phys[0], oper_sum = oper[0];
  for (int t = 1; t < n_threads; ++t) {
    accumulate(total.branch, partial[t].branch);
    accumulate(total.trunk, partial[t].trunk);
    total.output_bias += partial[t].output_bias;
    phys_sum += phys[t];
    oper_sum += oper[t];
  }
  if (losses) {
    losses->physics = phys_sum * inv_sum_q;
    losses->operator_ = oper_sum * inv_sum_p;
    losses->total = losses->physics + losses->operator_;
  }
  return total;
}

}  // namespace pdeop
