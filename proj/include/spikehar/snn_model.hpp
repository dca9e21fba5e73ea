#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spikehar {

struct LifParams {
  std::int32_t decay_u = 1024;  // per-step decay in 1/4096 units
  std::int32_t decay_v = 128;
  std::int32_t v_threshold = 64;
  std::int32_t refractory_steps = 0;
  double timestep_ms = 1.0;

  void validate() const;
  friend bool operator==(const LifParams&, const LifParams&) = default;
};

// Applies v_threshold / decay_u / decay_v / refractory_steps / timestep_ms
// from a flat key=value map; unknown keys are ignored.
LifParams lif_from_config(const std::map<std::string, std::string>& kv, LifParams base = {});

struct Shape3 {
  int h = 1;
  int w = 1;
  int c = 1;
  int size() const { return h * w * c; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

enum class LayerKind : std::uint8_t { conv2d = 0, dense = 1 };

inline constexpr int kKernel = 3;
inline constexpr int kMaxDelay = 62;

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  Shape3 in;   // dense layers use (1, 1, n)
  Shape3 out;

  std::size_t weight_count() const {
    return kind == LayerKind::conv2d
               ? static_cast<std::size_t>(out.c) * kKernel * kKernel * static_cast<std::size_t>(in.c)
               : static_cast<std::size_t>(out.size()) * static_cast<std::size_t>(in.size());
  }
};

// Conv weights are [out_c][kh][kw][in_c]; dense weights are [out][in].
// Delays are per presynaptic input neuron of the layer.
struct Layer {
  LayerSpec spec;
  std::int8_t exponent = 0;  // effective weight = w * 2^exponent
  std::vector<std::int8_t> weights;
  std::vector<std::uint8_t> delays;

  std::size_t conv_index(int of, int kh, int kw, int ic) const {
    return ((static_cast<std::size_t>(of) * kKernel + kh) * kKernel + kw) * spec.in.c + ic;
  }
  // Number of synapses leaving input neuron `in_index`.
  int fanout(int in_index) const;
};

struct NetworkModel {
  Shape3 input{7, 5, 2};
  std::vector<Layer> layers;
  LifParams lif;

  int class_count() const { return layers.empty() ? 0 : layers.back().spec.out.size(); }
  int neuron_count() const;
};

struct ValidationReport {
  bool ok = true;
  int layer = 0;  // 1-based, 0 when ok or model-level
  std::string message;
  int flatten_size = 0;  // size entering the first dense layer (0 if none)

  explicit operator bool() const { return ok; }
};

ValidationReport validate_model(const NetworkModel& m);
// Throws ShapeError / RangeError / ConfigError with the first inconsistency.
void require_valid(const NetworkModel& m);

// Builds an all-zero model from an architecture string like "32C64C128D12D":
// <n>C is a 3x3 same-padded conv with n features, <n>D a dense layer.
NetworkModel build_model(const Shape3& input, const std::string& arch, const LifParams& lif = {});

inline constexpr const char* kReferenceArch = "32C64C128D12D";

struct QuantizedLayer {
  std::vector<std::int8_t> weights;
  std::int8_t exponent = 0;
};

// Per-layer power-of-two scaling: exponent is the smallest e with
// max|w| / 2^e <= 127; weights = round(w / 2^e) clamped to [-128, 127].
QuantizedLayer quantize_layer(std::span<const double> weights);
std::vector<QuantizedLayer> quantize_weights(const std::vector<std::vector<double>>& layers);
std::vector<double> dequantize_layer(const Layer& layer);

void write_snm(std::ostream& out, const NetworkModel& m);
void write_snm(const std::filesystem::path& path, const NetworkModel& m);
NetworkModel read_snm(std::istream& in);
NetworkModel read_snm(const std::filesystem::path& path);

}  // namespace spikehar
