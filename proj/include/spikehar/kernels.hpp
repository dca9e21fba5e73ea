#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace spikehar::kernels {

inline constexpr std::int32_t kStateMax = (1 << 23) - 1;
inline constexpr std::int32_t kStateMin = -(1 << 23);
inline constexpr std::int32_t kDecayOne = 4096;

struct LifConstants {
  std::int32_t keep_u = 3072;  // 4096 - decay_u
  std::int32_t keep_v = 3968;  // 4096 - decay_v
  std::int32_t threshold = 64;
  std::int32_t refractory_steps = 0;
};

// Arrays updated in place for `n` neurons. `input` is the synaptic current
// for this step, pre-clamped by the caller to +-2^30. Returns false if any
// u or v left the signed 24-bit range; the arrays are then unspecified.
using LifUpdateFn = bool (*)(std::int32_t* u, std::int32_t* v, std::int32_t* refractory,
                             const std::int32_t* input, std::uint8_t* spikes, std::size_t n,
                             const LifConstants& k);

// pos[t] = s[t+1]-s[t] > eps, neg[t] = s[t+1]-s[t] < -eps, for t < n.
// `signal` holds n+1 samples.
using DeltaSpikesFn = void (*)(const double* signal, std::size_t n, double eps, std::uint8_t* pos,
                               std::uint8_t* neg);

// Sum of w[i] over i with x[i] != 0; x entries are 0 or 1.
using DotSpikesFn = std::int32_t (*)(const std::uint8_t* x, const std::int8_t* w, std::size_t n);

// acc[i] += w[i].
using AccumulateFn = void (*)(std::int32_t* acc, const std::int8_t* w, std::size_t n);

struct KernelTable {
  std::string_view name;
  LifUpdateFn lif_update;
  DeltaSpikesFn delta_spikes;
  DotSpikesFn dot_spikes;
  AccumulateFn accumulate;
};

const KernelTable& scalar_table();
// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table();

// Best table for this CPU. SPIKEHAR_KERNELS=scalar forces the reference path.
const KernelTable& active();

// Single-neuron reference step shared by every scalar path; returns false on overflow.
bool lif_step_one(std::int32_t& u, std::int32_t& v, std::int32_t& refractory, std::int32_t input,
                  std::uint8_t& spike, const LifConstants& k);

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace spikehar::kernels
