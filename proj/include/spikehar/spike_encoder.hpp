#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "spikehar/signal_ingest.hpp"

namespace spikehar {

enum class BankScheme { arithmetic, geometric };

BankScheme parse_bank_scheme(const std::string& s);

struct ThresholdBank {
  double base = 0.0;
  BankScheme scheme = BankScheme::geometric;
  int count = 0;
  std::vector<double> thresholds;  // strictly increasing, all > 0
};

// arithmetic: base*(i+1); geometric: base*2^i.
ThresholdBank build_bank(double base, BankScheme scheme, int count);

inline constexpr double kDefaultImuBase = 0.00005;
inline constexpr double kDefaultCapBase = 0.0000125;
inline constexpr int kDefaultThresholdCount = 5;

enum class Modality { imu, capacitance };

using BankSet = std::map<Modality, ThresholdBank>;

BankSet default_banks(BankScheme scheme = BankScheme::geometric);

struct SpikeEvent {
  int channel = 0;  // signal * thresholds + threshold
  std::int64_t timestep = 0;
  int polarity = 1;  // +1 or -1

  friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

// Dense binary occupancy over (signal, threshold, polarity plane, time).
// Plane 0 holds positive spikes, plane 1 negative. Time is the fastest axis.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(int signals, int thresholds, std::int64_t timesteps);

  int signals() const { return signals_; }
  int thresholds() const { return thresholds_; }
  static constexpr int polarities() { return 2; }
  std::int64_t timesteps() const { return timesteps_; }
  // Input neurons seen by the network: signals * thresholds * 2, HWC order.
  int channel_count() const { return signals_ * thresholds_ * 2; }

  static int flat_channel(int signal, int threshold, int plane, int thresholds) {
    return ((signal * thresholds) + threshold) * 2 + plane;
  }

  std::uint8_t at(int signal, int threshold, int plane, std::int64_t t) const {
    return cells_[offset(signal, threshold, plane) + static_cast<std::size_t>(t)];
  }
  void set(int signal, int threshold, int plane, std::int64_t t, bool on = true) {
    cells_[offset(signal, threshold, plane) + static_cast<std::size_t>(t)] = on;
  }
  // Contiguous time series of one flattened input channel.
  std::span<std::uint8_t> plane(int flat) {
    return {cells_.data() + static_cast<std::size_t>(flat) * timesteps_, static_cast<std::size_t>(timesteps_)};
  }
  std::span<const std::uint8_t> plane(int flat) const {
    return {cells_.data() + static_cast<std::size_t>(flat) * timesteps_, static_cast<std::size_t>(timesteps_)};
  }

  // Indices of input channels active at t, ascending.
  void active_at(std::int64_t t, std::vector<int>& out) const;
  void frame(std::int64_t t, std::span<std::uint8_t> out) const;

  std::size_t set_cell_count() const;
  // Sorted by (timestep, flattened channel).
  std::vector<SpikeEvent> events() const;

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  std::size_t offset(int s, int k, int p) const {
    return static_cast<std::size_t>(flat_channel(s, k, p, thresholds_)) * static_cast<std::size_t>(timesteps_);
  }

  int signals_ = 0;
  int thresholds_ = 0;
  std::int64_t timesteps_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Events ordered by (timestep, threshold index); channel is the threshold index.
std::vector<SpikeEvent> encode_channel(std::span<const double> signal, const ThresholdBank& bank);

// Produces a (7, count, 2, rows-1) tensor. IMU banks cover channels 0..5,
// the capacitance bank channel 6.
SpikeTensor encode_window(const SampleMatrix& window, const BankSet& banks);

struct SpikeStats {
  // counts[(signal * thresholds + threshold) * 2 + plane]
  std::vector<std::uint64_t> plane_counts;
  // counts[signal * thresholds + threshold], both polarities
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  double density = 0.0;
};

SpikeStats spike_stats(const SpikeTensor& t);

// SPK1 binary container, little-endian.
void write_spk(std::ostream& out, const SpikeTensor& t);
void write_spk(const std::filesystem::path& path, const SpikeTensor& t);
SpikeTensor read_spk(std::istream& in);
SpikeTensor read_spk(const std::filesystem::path& path);

}  // namespace spikehar
