#include "spikehar/snn_model.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "spikehar/error.hpp"

namespace spikehar {

namespace {

constexpr std::uint16_t kSnmVersion = 1;
constexpr int kMaxExponent = 30;

std::int32_t parse_i32(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::int32_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

}  // namespace

void LifParams::validate() const {
  if (decay_u < 0 || decay_u > 4096) throw ConfigError("decay_u must be in [0, 4096]");
  if (decay_v < 0 || decay_v > 4096) throw ConfigError("decay_v must be in [0, 4096]");
  if (v_threshold <= 0) throw ConfigError("v_threshold must be positive");
  if (refractory_steps < 0) throw ConfigError("refractory_steps must be non-negative");
  if (!(timestep_ms > 0.0) || !std::isfinite(timestep_ms)) throw ConfigError("timestep_ms must be positive");
}

LifParams lif_from_config(const std::map<std::string, std::string>& kv, LifParams base) {
  for (const auto& [key, val] : kv) {
    if (key == "v_threshold") base.v_threshold = parse_i32(key, val);
    else if (key == "decay_u") base.decay_u = parse_i32(key, val);
    else if (key == "decay_v") base.decay_v = parse_i32(key, val);
    else if (key == "refractory_steps" || key == "refractory") base.refractory_steps = parse_i32(key, val);
    else if (key == "timestep_ms") {
      try {
        base.timestep_ms = std::stod(val);
      } catch (const std::exception&) {
        throw ConfigError("bad real for timestep_ms: '" + val + "'");
      }
    }
  }
  base.validate();
  return base;
}

int Layer::fanout(int in_index) const {
  if (spec.kind == LayerKind::dense) return spec.out.size();
  const int c = spec.in.c;
  const int pos = in_index / c;
  const int h = pos / spec.in.w;
  const int w = pos % spec.in.w;
  int n = 0;
  for (int dh = -1; dh <= 1; ++dh)
    for (int dw = -1; dw <= 1; ++dw) {
      const int oh = h + dh, ow = w + dw;
      if (oh >= 0 && oh < spec.out.h && ow >= 0 && ow < spec.out.w) ++n;
    }
  return n * spec.out.c;
}

int NetworkModel::neuron_count() const {
  int n = 0;
  for (const auto& l : layers) n += l.spec.out.size();
  return n;
}

ValidationReport validate_model(const NetworkModel& m) {
  ValidationReport r;
  auto fail = [&](int layer, std::string msg) {
    r.ok = false;
    r.layer = layer;
    r.message = std::move(msg);
    return r;
  };
  try {
    m.lif.validate();
  } catch (const ConfigError& e) {
    return fail(0, e.what());
  }
  if (m.input.h <= 0 || m.input.w <= 0 || m.input.c <= 0) return fail(0, "empty input shape");
  if (m.layers.empty()) return fail(0, "model has no layers");

  Shape3 prev = m.input;
  bool prev_spatial = true;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const int idx = static_cast<int>(i) + 1;
    const Layer& l = m.layers[i];
    const LayerSpec& s = l.spec;
    if (s.in.size() <= 0 || s.out.size() <= 0) return fail(idx, "empty layer shape");
    if (s.kind == LayerKind::conv2d) {
      if (!prev_spatial) return fail(idx, "conv layer after a dense layer");
      if (!(s.in == prev))
        return fail(idx, "conv input " + std::to_string(s.in.h) + "x" + std::to_string(s.in.w) + "x" +
                             std::to_string(s.in.c) + " does not match predecessor output " +
                             std::to_string(prev.h) + "x" + std::to_string(prev.w) + "x" + std::to_string(prev.c));
      if (s.out.h != s.in.h || s.out.w != s.in.w) return fail(idx, "conv layer must preserve spatial size");
    } else {
      if (s.in.h != 1 || s.in.w != 1) return fail(idx, "dense input must be flat");
      if (s.in.size() != prev.size())
        return fail(idx, "dense input declared " + std::to_string(s.in.size()) + " but predecessor produces " +
                             std::to_string(prev.size()));
      if (s.out.h != 1 || s.out.w != 1) return fail(idx, "dense output must be flat");
      if (prev_spatial && r.flatten_size == 0) r.flatten_size = s.in.size();
      prev_spatial = false;
    }
    if (l.weights.size() != s.weight_count())
      return fail(idx, "expected " + std::to_string(s.weight_count()) + " weights, got " +
                           std::to_string(l.weights.size()));
    if (l.delays.size() != static_cast<std::size_t>(s.in.size()))
      return fail(idx, "expected " + std::to_string(s.in.size()) + " delays, got " + std::to_string(l.delays.size()));
    for (auto d : l.delays)
      if (d > kMaxDelay) return fail(idx, "delay " + std::to_string(d) + " exceeds " + std::to_string(kMaxDelay));
    if (l.exponent < -kMaxExponent || l.exponent > kMaxExponent) return fail(idx, "weight exponent out of range");
    prev = s.out;
  }
  return r;
}

void require_valid(const NetworkModel& m) {
  auto r = validate_model(m);
  if (r.ok) return;
  if (r.layer == 0) throw ConfigError(r.message);
  throw ShapeError(r.layer, r.message);
}

NetworkModel build_model(const Shape3& input, const std::string& arch, const LifParams& lif) {
  NetworkModel m;
  m.input = input;
  m.lif = lif;
  Shape3 prev = input;
  std::size_t i = 0;
  while (i < arch.size()) {
    std::size_t j = i;
    while (j < arch.size() && std::isdigit(static_cast<unsigned char>(arch[j]))) ++j;
    if (j == i || j >= arch.size()) throw ConfigError("bad architecture string '" + arch + "'");
    const int n = std::stoi(arch.substr(i, j - i));
    const char kind = static_cast<char>(std::toupper(static_cast<unsigned char>(arch[j])));
    if (n <= 0) throw ConfigError("layer width must be positive in '" + arch + "'");
    Layer l;
    if (kind == 'C') {
      if (prev.h == 1 && prev.w == 1 && !m.layers.empty() && m.layers.back().spec.kind == LayerKind::dense)
        throw ConfigError("conv after dense in '" + arch + "'");
      l.spec = {LayerKind::conv2d, prev, {prev.h, prev.w, n}};
    } else if (kind == 'D') {
      l.spec = {LayerKind::dense, {1, 1, prev.size()}, {1, 1, n}};
    } else {
      throw ConfigError("unknown layer kind '" + std::string(1, arch[j]) + "' in '" + arch + "'");
    }
    l.weights.assign(l.spec.weight_count(), 0);
    l.delays.assign(static_cast<std::size_t>(l.spec.in.size()), 0);
    prev = l.spec.out;
    m.layers.push_back(std::move(l));
    i = j + 1;
  }
  if (m.layers.empty()) throw ConfigError("empty architecture string");
  return m;
}

QuantizedLayer quantize_layer(std::span<const double> weights) {
  double max_abs = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw RangeError("non-finite weight");
    max_abs = std::max(max_abs, std::abs(w));
  }
  QuantizedLayer q;
  q.weights.resize(weights.size(), 0);
  if (max_abs == 0.0) return q;

  int e = static_cast<int>(std::floor(std::log2(max_abs / 127.0))) - 1;
  while (std::ldexp(max_abs, -e) > 127.0) ++e;
  // Step back if the log estimate overshot.
  while (std::ldexp(max_abs, -(e - 1)) <= 127.0) --e;
  if (e < -kMaxExponent || e > kMaxExponent) throw RangeError("weight scale exponent out of range");
  q.exponent = static_cast<std::int8_t>(e);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double r = std::round(std::ldexp(weights[i], -e));
    q.weights[i] = static_cast<std::int8_t>(std::clamp(r, -128.0, 127.0));
  }
  return q;
}

std::vector<QuantizedLayer> quantize_weights(const std::vector<std::vector<double>>& layers) {
  std::vector<QuantizedLayer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(quantize_layer(l));
  return out;
}

std::vector<double> dequantize_layer(const Layer& layer) {
  std::vector<double> out(layer.weights.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::ldexp(static_cast<double>(layer.weights[i]), layer.exponent);
  return out;
}

void write_snm(std::ostream& out, const NetworkModel& m) {
  using detail::put_le;
  require_valid(m);
  out.write("SNM1", 4);
  put_le<std::uint16_t>(out, kSnmVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.lif.decay_u));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.lif.decay_v));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.lif.v_threshold));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.lif.refractory_steps));
  put_le<double>(out, m.lif.timestep_ms);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.layers.size()));
  for (const auto& l : m.layers) {
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.spec.kind));
    for (int v : {l.spec.in.h, l.spec.in.w, l.spec.in.c, l.spec.out.h, l.spec.out.w, l.spec.out.c})
      put_le<std::uint16_t>(out, static_cast<std::uint16_t>(v));
    put_le<std::int8_t>(out, l.exponent);
    out.write(reinterpret_cast<const char*>(l.weights.data()), static_cast<std::streamsize>(l.weights.size()));
    out.write(reinterpret_cast<const char*>(l.delays.data()), static_cast<std::streamsize>(l.delays.size()));
  }
  if (!out) throw IoError("SNM1 write failed");
}

void write_snm(const std::filesystem::path& path, const NetworkModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_snm(out, m);
}

NetworkModel read_snm(std::istream& in) {
  using detail::get_le;
  detail::expect_magic(in, "SNM1");
  const auto version = get_le<std::uint16_t>(in);
  if (version != kSnmVersion) throw FormatError("unsupported SNM1 version " + std::to_string(version));
  NetworkModel m;
  m.lif.decay_u = static_cast<std::int32_t>(get_le<std::uint32_t>(in));
  m.lif.decay_v = static_cast<std::int32_t>(get_le<std::uint32_t>(in));
  m.lif.v_threshold = static_cast<std::int32_t>(get_le<std::uint32_t>(in));
  m.lif.refractory_steps = static_cast<std::int32_t>(get_le<std::uint32_t>(in));
  m.lif.timestep_ms = get_le<double>(in);
  const int count = get_le<std::uint16_t>(in);
  for (int i = 0; i < count; ++i) {
    Layer l;
    const auto kind = get_le<std::uint8_t>(in);
    if (kind > 1) throw FormatError("unknown layer kind " + std::to_string(kind));
    l.spec.kind = static_cast<LayerKind>(kind);
    l.spec.in = {get_le<std::uint16_t>(in), get_le<std::uint16_t>(in), get_le<std::uint16_t>(in)};
    l.spec.out = {get_le<std::uint16_t>(in), get_le<std::uint16_t>(in), get_le<std::uint16_t>(in)};
    l.exponent = get_le<std::int8_t>(in);
    l.weights.resize(l.spec.weight_count());
    l.delays.resize(static_cast<std::size_t>(l.spec.in.size()));
    if (!in.read(reinterpret_cast<char*>(l.weights.data()), static_cast<std::streamsize>(l.weights.size())) ||
        !in.read(reinterpret_cast<char*>(l.delays.data()), static_cast<std::streamsize>(l.delays.size())))
      throw FormatError("truncated SNM1 layer " + std::to_string(i + 1));
    m.layers.push_back(std::move(l));
  }
  if (m.layers.empty()) throw FormatError("SNM1 has no layers");
  m.input = m.layers.front().spec.in;
  if (m.layers.front().spec.kind == LayerKind::dense) m.input = {1, 1, m.layers.front().spec.in.size()};
  require_valid(m);
  return m;
}

NetworkModel read_snm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_snm(in);
}

}  // namespace spikehar
