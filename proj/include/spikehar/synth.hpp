#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spikehar/signal_ingest.hpp"

namespace spikehar {

enum class Waveform { sine, step, random_walk };

const char* waveform_name(Waveform w);

struct SyntheticSpec {
  int class_count = 3;
  int subjects = 4;
  int windows_per_class = 20;  // per subject
  double window_s = 2.0;
  double rate_hz = 50.0;       // source rate, before resampling
  double amplitude = 0.05;     // IMU units; capacitance uses a quarter
  double noise = 0.0005;       // white noise std per source sample
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t rows_per_segment() const;
};

// Generator parameters for one (subject, class) segment.
struct SegmentParams {
  std::string subject;
  int label = 0;
  Waveform waveform = Waveform::sine;
  double freq_hz = 0.0;   // sine
  double period_s = 0.0;  // step
  double sigma = 0.0;     // random walk increment std
  double amplitude = 0.0;
  std::size_t first_row = 0;
  std::size_t rows = 0;
};

struct SyntheticData {
  std::vector<RawRecording> recordings;  // one per subject, classes back to back
  std::vector<SegmentParams> segments;
};

// Class c uses waveform c % 3; higher classes scale the class parameters.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// <dir>/<subject>.csv per subject and <dir>/synth_params.json.
void write_synthetic(const std::filesystem::path& dir, const SyntheticSpec& spec, const SyntheticData& data);

}  // namespace spikehar
