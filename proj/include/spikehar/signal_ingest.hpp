#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spikehar {

inline constexpr int kChannelCount = 7;
inline constexpr int kImuChannelCount = 6;  // acc_x..gyr_z; channel 6 is capacitance

const std::vector<std::string>& default_channel_names();

// Row-major samples: rows are time, columns are channels.
struct SampleMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  SampleMatrix() = default;
  SampleMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::vector<double> column(std::size_t c) const;
};

struct RawRecording {
  std::string subject_id;
  std::string session_id;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channels;
  SampleMatrix samples;
  std::vector<int> labels;

  double duration_s() const { return static_cast<double>(samples.rows - 1) / sample_rate_hz; }
  // Throws InsufficientDataError / ConfigError when an invariant is broken.
  void validate() const;
};

enum class InterpMethod { cubic_spline, linear };

struct ResampleSpec {
  double target_rate_hz = 1000.0;
  InterpMethod method = InterpMethod::cubic_spline;
};

enum class LabelRule { majority, center_sample };

struct WindowSpec {
  double window_s = 2.0;
  double stride_s = 2.0;
  LabelRule label_rule = LabelRule::majority;
};

struct Window {
  SampleMatrix samples;
  int label = 0;
  std::size_t start_row = 0;
};

InterpMethod parse_interp_method(const std::string& s);
LabelRule parse_label_rule(const std::string& s);

// Reads `<channel...>,label` CSV. The rate comes from a `# rate_hz=<v>`
// comment line, or from `rate_hz` when the file carries none.
RawRecording load_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& schema = default_channel_names(),
                      std::optional<double> rate_hz = std::nullopt);

// Writes with round-trip precision so load_csv reproduces the values exactly.
void write_csv(const std::filesystem::path& path, const RawRecording& rec);

RawRecording resample(const RawRecording& rec, const ResampleSpec& spec);

std::vector<Window> slice_windows(const RawRecording& rec, const WindowSpec& spec);

// Natural cubic spline through (x[i], y[i]); x strictly increasing.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y);
  double operator()(double xq) const;

 private:
  std::vector<double> x_, y_, m_;  // m_ holds second derivatives at the knots
};

}  // namespace spikehar
