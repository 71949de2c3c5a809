#include "binio.hpp"
#include "pdeop/pipeline.hpp"

namespace pdeop {
namespace {

constexpr char kMagic[8] = {'P', 'D', 'O', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_mlp(detail::BinWriter& w, const MlpParams& p) {
  auto sizes = p.layer_sizes();
  w.pod<uint32_t>(static_cast<uint32_t>(sizes.size()));
  for (int s : sizes) w.pod<uint32_t>(static_cast<uint32_t>(s));
  for (int l = 0; l < p.layer_count(); ++l) {
    w.f64s(p.weights[l].data.data(), p.weights[l].data.size());
    w.f64s(p.biases[l].data(), p.biases[l].size());
  }
}

MlpParams read_mlp(detail::BinReader& r, Activation act) {
  uint32_t n = r.pod<uint32_t>();
  if (n < 2 || n > 64) throw ParseError("checkpoint: implausible layer count");
  std::vector<int> sizes(n);
  for (auto& s : sizes) {
    s = static_cast<int>(r.pod<uint32_t>());
    if (s < 1 || s > 1 << 20) throw ParseError("checkpoint: implausible layer size");
  }
  MlpParams p;
  p.activation = act;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    Matrix w(sizes[l + 1], sizes[l]);
    r.f64s(w.data.data(), w.data.size());
    p.weights.push_back(std::move(w));
    Vector b(sizes[l + 1]);
    r.f64s(b.data(), b.size());
    p.biases.push_back(std::move(b));
  }
  return p;
}

}  // namespace

void save_checkpoint(const DeepOnetModel& model, const MetricHistory& history,
                     const std::string& path) {
  detail::BinWriter w(path);
  w.bytes(kMagic, 8);
  w.pod<uint32_t>(kVersion);
  w.pod<double>(model.domain.time_horizon);
  w.pod<double>(model.domain.half_width);
  w.pod<uint32_t>(static_cast<uint32_t>(model.sensor_count));
  w.pod<uint32_t>(static_cast<uint32_t>(model.embedding_dim));
  w.pod<double>(model.output_scale);
  w.pod<double>(model.output_bias);
  w.pod<uint8_t>(model.branch.activation == Activation::relu ? 0 : 1);
  write_mlp(w, model.branch);
  write_mlp(w, model.trunk);
  w.pod<uint64_t>(history.size());
  for (const MetricRecord& rec : history) {
    w.pod<int64_t>(rec.iteration);
    w.pod<double>(rec.physics_loss);
    w.pod<double>(rec.operator_loss);
    w.pod<double>(rec.total_loss);
    w.pod<double>(rec.seconds);
  }
  w.check(path);
}

std::pair<DeepOnetModel, MetricHistory> load_checkpoint(const std::string& path) {
  detail::BinReader r(path);
  r.expect_magic(kMagic);
  uint32_t version = r.pod<uint32_t>();
  if (version != kVersion)
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
  DeepOnetModel m;
  m.domain.time_horizon = r.pod<double>();
  m.domain.half_width = r.pod<double>();
  m.sensor_count = static_cast<int>(r.pod<uint32_t>());
  m.embedding_dim = static_cast<int>(r.pod<uint32_t>());
  m.output_scale = r.pod<double>();
  m.output_bias = r.pod<double>();
  Activation act = r.pod<uint8_t>() == 0 ? Activation::relu : Activation::tanh;
  m.branch = read_mlp(r, act);
  m.trunk = read_mlp(r, act);
  if (m.branch.input_dim() != m.sensor_count || m.trunk.input_dim() != 2 ||
      m.branch.output_dim() != m.embedding_dim ||
      m.trunk.output_dim() != m.embedding_dim)
    throw ParseError(path + ": inconsistent network shapes");
  MetricHistory h;
  uint64_t count = r.pod<uint64_t>();
  if (count > (1ull << 32)) throw ParseError(path + ": implausible history length");
  h.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    MetricRecord rec;
    rec.iteration = r.pod<int64_t>();
    rec.physics_loss = r.pod<double>();
    rec.operator_loss = r.pod<double>();
    rec.total_loss = r.pod<double>();
    rec.seconds = r.pod<double>();
    h.push_back(rec);
  }
  return {std::move(m), std::move(h)};
}

}  // namespace pdeop
