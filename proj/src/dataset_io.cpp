#include "binio.hpp"
#include "pdeop/pipeline.hpp"

namespace pdeop {
namespace {

constexpr char kMagic[8] = {'P', 'D', 'O', 'N', 'D', 'S', 'E', 'T'};
constexpr uint32_t kVersion = 1;

}  // namespace

void save_dataset(const Dataset& data, const std::string& path) {
  detail::BinWriter w(path);
  w.bytes(kMagic, 8);
  w.pod<uint32_t>(kVersion);
  w.pod<double>(data.domain.time_horizon);
  w.pod<double>(data.domain.half_width);
  w.pod<uint64_t>(data.seed);
  const uint32_t m = data.sensors->size();
  const uint32_t n = static_cast<uint32_t>(data.samples.size());
  const uint32_t nq = n ? static_cast<uint32_t>(data.samples[0].colloc.interior.size()) : 0;
  const uint32_t np = n ? static_cast<uint32_t>(data.samples[0].colloc.boundary.size()) : 0;
  w.pod<uint32_t>(m);
  w.pod<uint32_t>(n);
  w.pod<uint32_t>(nq);
  w.pod<uint32_t>(np);
  w.f64s(data.sensors->positions.data(), m);
  for (const Sample& s : data.samples) {
    w.f64s(s.source.sensor_values.data(), m);
    for (const QueryPoint& y : s.colloc.interior) {
      w.pod<double>(y.tau);
      w.pod<double>(y.x);
    }
    for (const QueryPoint& y : s.colloc.boundary) {
      w.pod<double>(y.tau);
      w.pod<double>(y.x);
    }
  }
  w.check(path);
}

Dataset load_dataset(const std::string& path) {
  detail::BinReader r(path);
  r.expect_magic(kMagic);
  uint32_t version = r.pod<uint32_t>();
  if (version != kVersion)
    throw ParseError(path + ": unsupported dataset version " + std::to_string(version));
  Dataset data;
  data.domain.time_horizon = r.pod<double>();
  data.domain.half_width = r.pod<double>();
  data.seed = r.pod<uint64_t>();
  uint32_t m = r.pod<uint32_t>();
  uint32_t n = r.pod<uint32_t>();
  uint32_t nq = r.pod<uint32_t>();
  uint32_t np = r.pod<uint32_t>();
  if (m < 2 || m > 1 << 20 || n > 1 << 24 || nq > 1 << 20 || np > 1 << 20)
    throw ParseError(path + ": implausible dataset header");
  auto grid = std::make_shared<SensorGrid>();
  grid->positions.resize(m);
  r.f64s(grid->positions.data(), m);
  data.sensors = grid;
  data.samples.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    Sample s;
    s.source.sensors = grid;
    s.source.sensor_values.resize(m);
    r.f64s(s.source.sensor_values.data(), m);
    s.colloc.interior.resize(nq);
    for (auto& y : s.colloc.interior) {
      y.tau = r.pod<double>();
      y.x = r.pod<double>();
    }
    s.colloc.boundary.resize(np);
    for (auto& y : s.colloc.boundary) {
      y.tau = r.pod<double>();
      y.x = r.pod<double>();
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace pdeop
