#include "pdeop/tape.hpp"

namespace pdeop {

std::vector<double> Tape::gradient(int root) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[root] = 1.0;
  for (int i = root; i >= 0; --i) {
    double a = adj[i];
    if (a == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.a >= 0) adj[n.a] += n.da * a;
    if (n.b >= 0) adj[n.b] += n.db * a;
  }
  return adj;
}

MlpVars register_params(Tape& t, const MlpParams& p) {
  MlpVars v;
  v.activation = p.activation;
  v.sizes = p.layer_sizes();
  for (int l = 0; l < p.layer_count(); ++l) {
    std::vector<Var> w;
    w.reserve(p.weights[l].data.size());
    for (double x : p.weights[l].data) w.push_back(make_var(t, x));
    v.weights.push_back(std::move(w));
    std::vector<Var> b;
    b.reserve(p.biases[l].size());
    for (double x : p.biases[l]) b.push_back(make_var(t, x));
    v.biases.push_back(std::move(b));
  }
  return v;
}

std::vector<Var> mlp_forward(Tape& t, const MlpVars& p, std::span<const Var> input) {
  if (static_cast<int>(input.size()) != p.sizes.front())
    throw ShapeError("tape mlp_forward: input dim mismatch");
  std::vector<Var> a(input.begin(), input.end());
  int last = static_cast<int>(p.weights.size()) - 1;
  for (int l = 0; l <= last; ++l) {
    int rows = p.sizes[l + 1];
    int cols = p.sizes[l];
    std::vector<Var> z;
    z.reserve(rows);
    for (int i = 0; i < rows; ++i) {
      Var acc = p.biases[l][i];
      for (int j = 0; j < cols; ++j) acc = acc + p.weights[l][i * cols + j] * a[j];
      z.push_back(l == last ? acc : activate(p.activation, acc));
    }
    a = std::move(z);
  }
  return a;
}

std::vector<Var> mlp_forward(Tape& t, const MlpVars& p, std::span<const double> input) {
  std::vector<Var> in;
  in.reserve(input.size());
  for (double x : input) in.push_back(make_var(t, x));
  return mlp_forward(t, p, std::span<const Var>(in));
}

MlpParams extract_gradient(const MlpVars& vars, const std::vector<double>& adjoints) {
  MlpParams g;
  g.activation = vars.activation;
  for (size_t l = 0; l + 1 < vars.sizes.size(); ++l) {
    int rows = vars.sizes[l + 1];
    int cols = vars.sizes[l];
    Matrix w(rows, cols);
    for (size_t i = 0; i < w.data.size(); ++i) w.data[i] = adjoints[vars.weights[l][i].idx];
    g.weights.push_back(std::move(w));
    Vector b(rows);
    for (int i = 0; i < rows; ++i) b[i] = adjoints[vars.biases[l][i].idx];
    g.biases.push_back(std::move(b));
  }
  return g;
}

}  // namespace pdeop
