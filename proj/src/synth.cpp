#include "spikehar/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "spikehar/error.hpp"

namespace spikehar {

const char* waveform_name(Waveform w) {
  switch (w) {
    case Waveform::sine: return "sine";
    case Waveform::step: return "step";
    case Waveform::random_walk: return "random_walk";
  }
  return "?";
}

void SyntheticSpec::validate() const {
  if (class_count < 2 || class_count > 12) throw ConfigError("synth: class_count must be in [2, 12]");
  if (subjects < 1) throw ConfigError("synth: subjects must be >= 1");
  if (windows_per_class < 1) throw ConfigError("synth: windows_per_class must be >= 1");
  if (!(rate_hz > 0) || !(window_s > 0)) throw ConfigError("synth: rate_hz and window_s must be positive");
  const double rows = window_s * rate_hz;
  if (std::abs(rows - std::round(rows)) > 1e-9 || rows < 2)
    throw ConfigError("synth: window_s * rate_hz must be an integer >= 2");
  if (!(amplitude > 0) || noise < 0) throw ConfigError("synth: amplitude must be positive and noise >= 0");
}

std::size_t SyntheticSpec::rows_per_segment() const {
  return static_cast<std::size_t>(std::llround(window_s * rate_hz)) * static_cast<std::size_t>(windows_per_class);
}

namespace {

constexpr double kEnvelopeDepth = 0.25;
constexpr double kEnvelopePeriodS = 6.7;
constexpr double kPhaseJitter = 0.05;

SegmentParams class_params(int label, double amplitude) {
  SegmentParams p;
  p.label = label;
  p.waveform = static_cast<Waveform>(label % 3);
  const double tier = 1.0 + label / 3;  // later classes repeat the families faster
  p.amplitude = amplitude;
  p.freq_hz = 2.0 * tier;
  p.period_s = 1.0 / tier;
  p.sigma = 0.025 * amplitude * tier;
  return p;
}

// Per-channel gain pattern, fixed per class so classes differ spatially too.
double channel_gain(int label, int ch) {
  const double g = 0.5 + 0.125 * static_cast<double>((ch * 7 + label * 3) % 5);
  return ch == kImuChannelCount ? 0.25 * g : g;
}

// Cross-channel phase pattern, a property of the movement rather than the subject.
double class_phase(int label, int ch) {
  return std::fmod(0.6180339887 * static_cast<double>((ch + 1) * (label + 2)), 1.0);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData out;
  const std::size_t seg_rows = spec.rows_per_segment();
  const std::size_t total = seg_rows * static_cast<std::size_t>(spec.class_count) + 1;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  for (int s = 0; s < spec.subjects; ++s) {
    RawRecording rec;
    rec.subject_id = "subject" + std::to_string(s + 1);
    rec.session_id = "synthetic";
    rec.sample_rate_hz = spec.rate_hz;
    rec.channels = default_channel_names();
    rec.samples = SampleMatrix(total, kChannelCount);
    rec.labels.assign(total, spec.class_count - 1);

    std::vector<double> offset(kChannelCount);
    for (auto& o : offset) o = 2.0 * uni(rng) - 1.0;
    // Mild per-subject variation, shared by all classes of the subject.
    const double scale = 0.95 + 0.1 * uni(rng);
    const double tempo = 0.98 + 0.04 * uni(rng);

    for (int c = 0; c < spec.class_count; ++c) {
      SegmentParams p = class_params(c, spec.amplitude);
      p.subject = rec.subject_id;
      p.amplitude *= scale;
      p.sigma *= scale;
      p.freq_hz *= tempo;
      p.first_row = seg_rows * static_cast<std::size_t>(c);
      p.rows = seg_rows;

      for (int ch = 0; ch < kChannelCount; ++ch) {
        const double amp = p.amplitude * channel_gain(c, ch);
        const double phase = class_phase(c, ch) + kPhaseJitter * (uni(rng) - 0.5);
        const double env_phase = uni(rng);
        double walk = 0.0;
        for (std::size_t r = 0; r < seg_rows; ++r) {
          const double t = static_cast<double>(r) / spec.rate_hz;
          // Slow intensity drift so repetitions within a subject differ.
          const double env = 1.0 + kEnvelopeDepth * std::sin(two_pi * (t / kEnvelopePeriodS + env_phase));
          double v = 0.0;
          switch (p.waveform) {
            case Waveform::sine:
              v = env * amp * std::sin(two_pi * (p.freq_hz * t + phase));
              break;
            case Waveform::step:
              v = std::fmod(t / p.period_s + phase, 1.0) < 0.5 ? 0.5 * env * amp : -0.5 * env * amp;
              break;
            case Waveform::random_walk:
              walk += env * p.sigma * channel_gain(c, ch) * gauss(rng);
              v = walk;
              break;
          }
          rec.samples(p.first_row + r, static_cast<std::size_t>(ch)) = offset[ch] + v + spec.noise * gauss(rng);
        }
      }
      for (std::size_t r = 0; r < seg_rows; ++r) rec.labels[p.first_row + r] = c;
      out.segments.push_back(p);
    }
    // Closing sample so the recording spans exactly class_count segments.
    for (int ch = 0; ch < kChannelCount; ++ch)
      rec.samples(total - 1, static_cast<std::size_t>(ch)) = rec.samples(total - 2, static_cast<std::size_t>(ch));
    out.recordings.push_back(std::move(rec));
  }
  return out;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticSpec& spec, const SyntheticData& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("synth: cannot create " + dir.string() + ": " + ec.message());
  for (const auto& rec : data.recordings) write_csv(dir / (rec.subject_id + ".csv"), rec);

  nlohmann::ordered_json j;
  j["class_count"] = spec.class_count;
  j["subjects"] = spec.subjects;
  j["windows_per_class"] = spec.windows_per_class;
  j["window_s"] = spec.window_s;
  j["rate_hz"] = spec.rate_hz;
  j["amplitude"] = spec.amplitude;
  j["noise"] = spec.noise;
  j["seed"] = spec.seed;
  auto& segs = j["segments"] = nlohmann::ordered_json::array();
  for (const auto& p : data.segments)
    segs.push_back({{"subject", p.subject},
                    {"label", p.label},
                    {"waveform", waveform_name(p.waveform)},
                    {"freq_hz", p.freq_hz},
                    {"period_s", p.period_s},
                    {"sigma", p.sigma},
                    {"amplitude", p.amplitude},
                    {"first_row", p.first_row},
                    {"rows", p.rows}});
  std::ofstream f(dir / "synth_params.json", std::ios::binary);
  if (!f) throw IoError("synth: cannot write " + (dir / "synth_params.json").string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("synth: write failed in " + dir.string());
}

}  // namespace spikehar
