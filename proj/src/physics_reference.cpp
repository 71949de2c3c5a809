#include <cmath>

#include "pdeop/physics.hpp"
#include "pdeop/tape.hpp"

namespace pdeop {
namespace {

Var alpha_var(const DiffusionFunction& a, Var u) {
  switch (a.kind) {
    case DiffusionFunction::Kind::quadratic:
      return square(u);
    case DiffusionFunction::Kind::identity:
      return u;
    case DiffusionFunction::Kind::power:
      return pow_abs(u, a.exponent);
  }
  return u;
}

}  // namespace

ModelGrads loss_gradient_reference(const DeepOnetModel& model,
                                   std::span<const Sample> samples,
                                   const DiffusionFunction& alpha,
                                   const StencilConfig& st, LossBreakdown* losses) {
  if (samples.empty()) throw ContractError("loss_gradient_reference: empty dataset");
  size_t sum_q = 0, sum_p = 0;
  for (const Sample& s : samples) {
    sum_q += s.colloc.interior.size();
    sum_p += s.colloc.boundary.size();
  }
  if (sum_q == 0 && sum_p == 0)
    throw ContractError("loss_gradient_reference: no collocation points");

  ModelGrads total;
  total.branch = zeros_like(model.branch);
  total.trunk = zeros_like(model.trunk);
  double phys_sum = 0.0, oper_sum = 0.0;

  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    Tape t;
    MlpVars bv = register_params(t, model.branch);
    MlpVars tv = register_params(t, model.trunk);
    Var b0 = make_var(t, model.output_bias);

    // Branch embedding once per function, scaled by c.
    std::vector<Var> emb = mlp_forward(t, bv, std::span<const double>(s.source.sensor_values));
    for (Var& e : emb) e = e * model.output_scale;

    auto op_eval = [&](QueryPoint y) {
      double in[2];
      model.trunk_input(y, in);
      std::vector<Var> te = mlp_forward(t, tv, std::span<const double>(in, 2));
      Var acc = b0;
      for (int k = 0; k < model.embedding_dim; ++k) acc = acc + emb[k] * te[k];
      return acc;
    };

    Var fn_loss = make_var(t, 0.0);
    for (const QueryPoint& y : s.colloc.interior) {
      check_margin(model, y, st);
      Var g_c = op_eval(y);
      Var g_tp = op_eval({y.tau + st.h_tau, y.x});
      Var g_tm = op_eval({y.tau - st.h_tau, y.x});
      Var g_xp = op_eval({y.tau, y.x + st.h_x});
      Var g_xm = op_eval({y.tau, y.x - st.h_x});
      Var d_tau = (g_tp - g_tm) / (2.0 * st.h_tau);
      Var d_xx = (alpha_var(alpha, g_xp) - 2.0 * alpha_var(alpha, g_c) +
                  alpha_var(alpha, g_xm)) /
                 (st.h_x * st.h_x);
      Var err = d_tau - d_xx - s.source.eval(y.x);
      phys_sum += err.value() * err.value();
      fn_loss = fn_loss + square(err) / static_cast<double>(sum_q);
    }
    for (const QueryPoint& y : s.colloc.boundary) {
      check_on_boundary(model, y);
      Var v = op_eval(y);
      oper_sum += v.value() * v.value();
      fn_loss = fn_loss + square(v) / static_cast<double>(sum_p);
    }

    if (std::isnan(fn_loss.value()))
      throw PoisonedGradientError(
          "loss_gradient_reference: NaN loss from function index " + std::to_string(i));

    std::vector<double> adj = t.gradient(fn_loss.idx);
    accumulate(total.branch, extract_gradient(bv, adj));
    accumulate(total.trunk, extract_gradient(tv, adj));
    total.output_bias += adj[b0.idx];
  }

  if (losses) {
    losses->physics = phys_sum / static_cast<double>(sum_q);
    losses->operator_ = oper_sum / static_cast<double>(sum_p);
    losses->total = losses->physics + losses->operator_;
  }
  return total;
}

}  // namespace pdeop
