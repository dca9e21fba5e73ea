#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "spikehar/kernels.hpp"
#include "spikehar/snn_model.hpp"
#include "spikehar/spike_encoder.hpp"

namespace spikehar {

struct NeuronState {
  std::vector<std::int32_t> u;
  std::vector<std::int32_t> v;
  std::vector<std::int32_t> refractory_remaining;
};

// Per-run state of every layer plus the axonal delay lines feeding it.
struct NetworkState {
  std::vector<NeuronState> layers;
  // history[l] holds kMaxDelay+1 frames of layer l's undelayed input.
  std::vector<std::vector<std::uint8_t>> history;
  std::vector<std::vector<std::uint8_t>> last_spikes;  // per layer, this step
  std::int64_t t = 0;

  static NetworkState reset_for(const NetworkModel& m);
};

// Spike indices per timestep.
using Raster = std::vector<std::vector<std::int32_t>>;

struct RunResult {
  std::vector<std::int64_t> counts;  // per output class
  Raster input_raster;               // spikes entering the network (undelayed)
  std::vector<Raster> layer_rasters;
  std::int64_t timesteps = 0;
  std::uint64_t neuron_updates = 0;      // LIF updates performed by the backend
  std::uint64_t synaptic_deliveries = 0; // weight additions actually applied

  // Outputs compared for backend equivalence: counts and rasters.
  bool same_spikes(const RunResult& o) const {
    return counts == o.counts && input_raster == o.input_raster && layer_rasters == o.layer_rasters;
  }
};

// One timestep of the reference backend; returns the output layer's spikes.
// `kernels` selects the scalar or vector kernel table.
std::vector<std::uint8_t> step_dense(const NetworkModel& m, NetworkState& state,
                                     std::span<const std::uint8_t> input_spikes,
                                     const kernels::KernelTable& k = kernels::active());

RunResult run_dense(const NetworkModel& m, const SpikeTensor& input,
                    const kernels::KernelTable& k = kernels::active());

// Sparse backend: only spikes in flight and neurons with non-zero state
// are touched. Bit-identical to run_dense.
RunResult run_event_driven(const NetworkModel& m, const SpikeTensor& input);

// Argmax with ties resolved to the lowest index.
int classify(std::span<const std::int64_t> counts);

kernels::LifConstants lif_constants(const LifParams& p);

// Synaptic current from an integer weight sum: sum * 2^exponent, floored,
// clamped to +-2^30 (beyond which the 24-bit check fails anyway).
inline std::int32_t scale_current(std::int64_t sum, int exponent) {
  std::int64_t x;
  if (exponent >= 0) {
    constexpr std::int64_t lim = std::int64_t{1} << 31;
    x = std::clamp<std::int64_t>(sum, -lim, lim) * (std::int64_t{1} << exponent);
  } else {
    x = sum >> (-exponent);  // arithmetic shift floors
  }
  constexpr std::int64_t cap = std::int64_t{1} << 30;
  return static_cast<std::int32_t>(std::clamp(x, -cap, cap));
}

}  // namespace spikehar
