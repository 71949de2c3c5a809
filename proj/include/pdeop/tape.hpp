#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pdeop/nnet.hpp"

namespace pdeop {

/// Scalar reverse-mode tape. Every arithmetic result records its parents and
/// local partials; gradient() runs one adjoint sweep from a scalar root.
class Tape {
 public:
  struct Node {
    int a = -1, b = -1;
    double da = 0.0, db = 0.0;
  };

  int leaf(double v) {
    nodes_.push_back({});
    vals_.push_back(v);
    return static_cast<int>(nodes_.size()) - 1;
  }
  int unary(int a, double val, double da) {
    nodes_.push_back({a, -1, da, 0.0});
    vals_.push_back(val);
    return static_cast<int>(nodes_.size()) - 1;
  }
  int binary(int a, int b, double val, double da, double db) {
    nodes_.push_back({a, b, da, db});
    vals_.push_back(val);
    return static_cast<int>(nodes_.size()) - 1;
  }

  double value(int i) const { return vals_[i]; }
  size_t size() const { return nodes_.size(); }

  /// Adjoints of every node with respect to the scalar at `root`.
  std::vector<double> gradient(int root) const;

 private:
  std::vector<Node> nodes_;
  std::vector<double> vals_;
};

/// Lightweight handle into a Tape; copyable, value-semantic.
struct Var {
  Tape* tape = nullptr;
  int idx = -1;

  double value() const { return tape->value(idx); }
};

inline Var make_var(Tape& t, double v) { return {&t, t.leaf(v)}; }

inline Var operator+(Var a, Var b) {
  return {a.tape, a.tape->binary(a.idx, b.idx, a.value() + b.value(), 1.0, 1.0)};
}
inline Var operator-(Var a, Var b) {
  return {a.tape, a.tape->binary(a.idx, b.idx, a.value() - b.value(), 1.0, -1.0)};
}
inline Var operator*(Var a, Var b) {
  return {a.tape, a.tape->binary(a.idx, b.idx, a.value() * b.value(), b.value(), a.value())};
}
inline Var operator+(Var a, double c) { return {a.tape, a.tape->unary(a.idx, a.value() + c, 1.0)}; }
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a + (-c); }
inline Var operator-(double c, Var a) { return {a.tape, a.tape->unary(a.idx, c - a.value(), -1.0)}; }
inline Var operator*(Var a, double c) { return {a.tape, a.tape->unary(a.idx, a.value() * c, c)}; }
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator-(Var a) { return a * -1.0; }
inline Var operator/(Var a, double c) { return a * (1.0 / c); }

inline Var tanh(Var a) {
  double t = std::tanh(a.value());
  return {a.tape, a.tape->unary(a.idx, t, 1.0 - t * t)};
}
inline Var relu(Var a) {
  double v = a.value();
  return {a.tape, a.tape->unary(a.idx, v > 0.0 ? v : 0.0, v > 0.0 ? 1.0 : 0.0)};
}
inline Var square(Var a) {
  double v = a.value();
  return {a.tape, a.tape->unary(a.idx, v * v, 2.0 * v)};
}
inline Var abs(Var a) {
  double v = a.value();
  return {a.tape, a.tape->unary(a.idx, std::fabs(v), v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0))};
}
inline Var pow_abs(Var a, double p) {
  // |v|^(p-1) * v, smooth odd power; derivative p*|v|^(p-1)
  double v = a.value();
  double av = std::fabs(v);
  return {a.tape, a.tape->unary(a.idx, std::pow(av, p - 1.0) * v,
                                p * std::pow(av, p - 1.0))};
}

inline Var activate(Activation act, Var z) {
  return act == Activation::relu ? relu(z) : tanh(z);
}

/// Tape-resident copy of MlpParams; leaves are registered in pack order so
/// adjoints map back with extract_gradient.
struct MlpVars {
  std::vector<std::vector<Var>> weights;  // row-major per layer
  std::vector<std::vector<Var>> biases;
  Activation activation;
  std::vector<int> sizes;  // layer_sizes
};

MlpVars register_params(Tape& t, const MlpParams& p);

/// Same composition as pdeop::mlp_forward, on the tape.
std::vector<Var> mlp_forward(Tape& t, const MlpVars& p, std::span<const Var> input);
std::vector<Var> mlp_forward(Tape& t, const MlpVars& p, std::span<const double> input);

/// Gather adjoints of the registered parameter leaves into MlpParams shape.
MlpParams extract_gradient(const MlpVars& vars, const std::vector<double>& adjoints);

/// Reverse-mode gradient of a scalar computation over one parameter set.
/// The builder receives the tape-resident params and returns the scalar root.
template <typename F>
MlpParams grad_params(const MlpParams& p, F&& build) {
  Tape t;
  MlpVars vars = register_params(t, p);
  Var root = build(t, vars);
  return extract_gradient(vars, t.gradient(root.idx));
}

}  // namespace pdeop
