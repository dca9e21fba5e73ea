#include "spikehar/spike_encoder.hpp"

#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "spikehar/error.hpp"
#include "spikehar/kernels.hpp"

namespace spikehar {

BankScheme parse_bank_scheme(const std::string& s) {
  if (s == "geometric") return BankScheme::geometric;
  if (s == "arithmetic") return BankScheme::arithmetic;
  throw ConfigError("unknown threshold scheme '" + s + "'");
}

ThresholdBank build_bank(double base, BankScheme scheme, int count) {
  if (!(base > 0.0) || !std::isfinite(base)) throw ConfigError("threshold base must be positive");
  if (count < 1) throw ConfigError("threshold count must be >= 1");
  ThresholdBank bank{base, scheme, count, {}};
  bank.thresholds.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    bank.thresholds.push_back(scheme == BankScheme::arithmetic ? base * (i + 1)
                                                               : std::ldexp(base, i));
  }
  return bank;
}

BankSet default_banks(BankScheme scheme) {
  return {{Modality::imu, build_bank(kDefaultImuBase, scheme, kDefaultThresholdCount)},
          {Modality::capacitance, build_bank(kDefaultCapBase, scheme, kDefaultThresholdCount)}};
}

SpikeTensor::SpikeTensor(int signals, int thresholds, std::int64_t timesteps)
    : signals_(signals), thresholds_(thresholds), timesteps_(timesteps) {
  if (signals <= 0 || thresholds <= 0 || timesteps < 0) throw ConfigError("bad spike tensor shape");
  cells_.assign(static_cast<std::size_t>(signals) * thresholds * 2 * static_cast<std::size_t>(timesteps), 0);
}

void SpikeTensor::active_at(std::int64_t t, std::vector<int>& out) const {
  out.clear();
  const int n = channel_count();
  for (int c = 0; c < n; ++c)
    if (cells_[static_cast<std::size_t>(c) * timesteps_ + t]) out.push_back(c);
}

void SpikeTensor::frame(std::int64_t t, std::span<std::uint8_t> out) const {
  const int n = channel_count();
  for (int c = 0; c < n; ++c) out[c] = cells_[static_cast<std::size_t>(c) * timesteps_ + t];
}

std::size_t SpikeTensor::set_cell_count() const {
  std::size_t n = 0;
  for (auto c : cells_) n += c;
  return n;
}

std::vector<SpikeEvent> SpikeTensor::events() const {
  std::vector<SpikeEvent> out;
  std::vector<int> active;
  for (std::int64_t t = 0; t < timesteps_; ++t) {
    active_at(t, active);
    for (int flat : active) out.push_back({flat / 2, t, (flat % 2) == 0 ? 1 : -1});
  }
  return out;
}

std::vector<SpikeEvent> encode_channel(std::span<const double> signal, const ThresholdBank& bank) {
  if (signal.size() < 2) throw InsufficientDataError("encode_channel needs at least 2 samples");
  const std::size_t steps = signal.size() - 1;
  const auto& k = kernels::active();
  std::vector<std::uint8_t> pos(steps * bank.thresholds.size()), neg(pos.size());
  for (std::size_t i = 0; i < bank.thresholds.size(); ++i)
    k.delta_spikes(signal.data(), steps, bank.thresholds[i], pos.data() + i * steps, neg.data() + i * steps);

  std::vector<SpikeEvent> out;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < bank.thresholds.size(); ++i) {
      if (pos[i * steps + t]) out.push_back({static_cast<int>(i), static_cast<std::int64_t>(t), 1});
      else if (neg[i * steps + t]) out.push_back({static_cast<int>(i), static_cast<std::int64_t>(t), -1});
    }
  }
  return out;
}

SpikeTensor encode_window(const SampleMatrix& window, const BankSet& banks) {
  if (window.cols != static_cast<std::size_t>(kChannelCount))
    throw ConfigError("encode_window expects 7 columns");
  if (window.rows < 2) throw InsufficientDataError("encode_window needs at least 2 rows");
  auto imu = banks.find(Modality::imu);
  auto cap = banks.find(Modality::capacitance);
  if (imu == banks.end()) throw ConfigError("missing IMU threshold bank");
  if (cap == banks.end()) throw ConfigError("missing capacitance threshold bank");
  if (imu->second.count != cap->second.count)
    throw ConfigError("IMU and capacitance banks must have the same threshold count");

  const int count = imu->second.count;
  const auto steps = static_cast<std::int64_t>(window.rows - 1);
  SpikeTensor out(kChannelCount, count, steps);
  const auto& k = kernels::active();
  for (int s = 0; s < kChannelCount; ++s) {
    const std::vector<double> series = window.column(static_cast<std::size_t>(s));
    const ThresholdBank& bank = s < kImuChannelCount ? imu->second : cap->second;
    for (int i = 0; i < count; ++i) {
      auto pos = out.plane(SpikeTensor::flat_channel(s, i, 0, count));
      auto neg = out.plane(SpikeTensor::flat_channel(s, i, 1, count));
      k.delta_spikes(series.data(), static_cast<std::size_t>(steps), bank.thresholds[static_cast<std::size_t>(i)],
                     pos.data(), neg.data());
    }
  }
  return out;
}

SpikeStats spike_stats(const SpikeTensor& t) {
  SpikeStats st;
  const int planes = t.channel_count();
  st.plane_counts.assign(static_cast<std::size_t>(planes), 0);
  st.counts.assign(static_cast<std::size_t>(planes / 2), 0);
  for (int c = 0; c < planes; ++c) {
    std::uint64_t n = 0;
    for (auto cell : t.plane(c)) n += cell;
    st.plane_counts[static_cast<std::size_t>(c)] = n;
    st.counts[static_cast<std::size_t>(c / 2)] += n;
    st.total += n;
  }
  const double cells = static_cast<double>(planes) * static_cast<double>(t.timesteps());
  st.density = cells > 0 ? static_cast<double>(st.total) / cells : 0.0;
  return st;
}

void write_spk(std::ostream& out, const SpikeTensor& t) {
  using detail::put_le;
  if (t.timesteps() > 0xFFFFFFFFll) throw FormatError("too many timesteps for SPK1");
  out.write("SPK1", 4);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.signals()));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.thresholds()));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(SpikeTensor::polarities()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.timesteps()));
  const auto count = t.set_cell_count();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(count));
  std::vector<int> active;
  for (std::int64_t step = 0; step < t.timesteps(); ++step) {
    t.active_at(step, active);
    for (int flat : active) {
      put_le<std::uint16_t>(out, static_cast<std::uint16_t>(flat));
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(step));
    }
  }
  if (!out) throw IoError("SPK1 write failed");
}

void write_spk(const std::filesystem::path& path, const SpikeTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_spk(out, t);
}

SpikeTensor read_spk(std::istream& in) {
  using detail::get_le;
  detail::expect_magic(in, "SPK1");
  const int signals = get_le<std::uint16_t>(in);
  const int thresholds = get_le<std::uint16_t>(in);
  const int polarities = get_le<std::uint16_t>(in);
  const std::int64_t steps = get_le<std::uint32_t>(in);
  const std::uint32_t count = get_le<std::uint32_t>(in);
  if (polarities != 2) throw FormatError("SPK1 polarity count must be 2");
  if (signals == 0 || thresholds == 0) throw FormatError("SPK1 empty shape");
  SpikeTensor t(signals, thresholds, steps);
  const int channels = t.channel_count();
  for (std::uint32_t e = 0; e < count; ++e) {
    const int flat = get_le<std::uint16_t>(in);
    const std::int64_t step = get_le<std::uint32_t>(in);
    if (flat >= channels || step >= steps) throw FormatError("SPK1 event out of range");
    const int plane = flat % 2;
    const int k = (flat / 2) % thresholds;
    const int s = (flat / 2) / thresholds;
    if (t.at(s, k, 1 - plane, step)) throw FormatError("SPK1 cell holds both polarities");
    t.set(s, k, plane, step);
  }
  return t;
}

SpikeTensor read_spk(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_spk(in);
}

}  // namespace spikehar
