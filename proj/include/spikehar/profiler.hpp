#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spikehar/config.hpp"
#include "spikehar/snn_engine.hpp"
#include "spikehar/snn_model.hpp"

namespace spikehar {

struct OpCounters {
  std::uint64_t sops = 0;            // spike x fanout synapse traversals
  std::uint64_t neuron_updates = 0;  // as performed by the backend that produced the run
  std::uint64_t dense_updates = 0;   // neurons x timesteps
  std::vector<std::uint64_t> spikes_per_layer;  // [0] is the input layer
  std::int64_t timesteps = 0;

  OpCounters& operator+=(const OpCounters& o);
};

// Walks the rasters of a finished run. Identical for both backends except
// neuron_updates.
OpCounters count_ops(const NetworkModel& m, const RunResult& run);

struct EnergyModel {
  double e_sop = 0.0;       // J per synaptic operation
  double e_update = 0.0;    // J per neuron update
  double p_static = 0.0;    // W
  double timestep_s = 0.0;  // s per timestep

  void validate() const;
  // Keys e_sop, e_update, p_static, timestep_s; absent keys stay 0.
  static EnergyModel from_config(const Config& c);
  static EnergyModel load(const std::filesystem::path& path);
};

struct EnergyEstimate {
  double dynamic_j = 0.0;
  double static_j = 0.0;
  double total_j = 0.0;
};

EnergyEstimate estimate_energy(const OpCounters& c, const EnergyModel& m);

// Energy-delay product in J*s.
double edp(double energy_j, double latency_s);

// Spike-injection stall of the host, charged per timestep when enabled.
inline constexpr double kInjectionStallS = 1e-3;

double modeled_latency(std::int64_t timesteps, double timestep_s, bool injection_stall = false);

struct ReportRow {
  std::string hardware;
  std::string model;
  double accuracy = 0.0;  // [0, 1]
  double latency_s = 0.0;
  double energy_j = 0.0;

  double edp_js() const { return energy_j * latency_s; }
};

// Published edge-processor reference rows (ANN baselines).
std::vector<ReportRow> baseline_rows();

struct ProfileReport {
  ReportRow measured;
  OpCounters counters;
  EnergyEstimate energy;
  double wall_clock_s = 0.0;  // harness time, not a hardware latency
  std::vector<ReportRow> baselines;

  // Measured row plus baselines, sorted by EDP ascending.
  std::vector<ReportRow> rows() const;
};

// Sorted by EDP ascending; ties keep hardware/model name order.
std::vector<ReportRow> sort_rows(std::vector<ReportRow> rows);

// hardware,model,accuracy,latency_ms,energy_mj,edp_ujs
std::string render_csv(const std::vector<ReportRow>& rows);
std::string render_table(const std::vector<ReportRow>& rows);

}  // namespace spikehar
