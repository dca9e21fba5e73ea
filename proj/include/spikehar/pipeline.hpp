#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spikehar/config.hpp"
#include "spikehar/error.hpp"
#include "spikehar/profiler.hpp"
#include "spikehar/signal_ingest.hpp"
#include "spikehar/spike_encoder.hpp"
#include "spikehar/trainer.hpp"

namespace spikehar {

// A failure inside one pipeline stage; what() is prefixed with the stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = "out";
  std::optional<double> rate_hz;  // for CSVs without a rate comment

  ResampleSpec resample;
  WindowSpec window;

  BankScheme bank_scheme = BankScheme::geometric;
  double imu_base = kDefaultImuBase;
  double cap_base = kDefaultCapBase;
  int threshold_count = kDefaultThresholdCount;

  LifParams lif;
  TrainConfig train;
  std::string arch;  // empty: "64D<classes>D"
  SurrogateSpec surrogate;
  double loss_true = -1.0;  // spike counts; negative selects 0.3*T / 0.01*T
  double loss_false = -1.0;
  bool weighted_classes = true;

  EnergyModel energy;
  bool injection_stall = false;
  std::string hardware_label = "desk (modeled)";
  bool include_baselines = true;

  // Keys are documented in the README; unknown keys are rejected.
  static PipelineConfig from_config(const Config& c);
  BankSet banks() const;
};

// Configuration keys understood by from_config, for environment overrides.
const std::vector<std::string>& pipeline_config_keys();

struct IngestedWindow {
  Window window;
  std::string subject;
};

// Every *.csv under dir (sorted by name), resampled and windowed.
std::vector<IngestedWindow> ingest_dir(const std::filesystem::path& dir, const ResampleSpec& resample,
                                       const WindowSpec& window, std::optional<double> rate_hz = std::nullopt);

std::vector<Sample> encode_windows(const std::vector<IngestedWindow>& windows, const BankSet& banks, int jobs);

// <dir>/NNNNN.spk plus index.csv (file,subject,label).
void write_spike_dir(const std::filesystem::path& dir, const std::vector<Sample>& samples);
std::vector<Sample> read_spike_dir(const std::filesystem::path& dir);

std::string default_arch(int class_count);
int class_count_of(const std::vector<Sample>& samples);
LossSpec loss_for(const PipelineConfig& cfg, const std::vector<Sample>& train_set, int class_count);

// Writes `<path>.partial`, then renames onto path.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

struct PipelineResult {
  CrossValidation cv;
  TrainResult final_train;
  NetworkModel model;
  ProfileReport report;
  std::size_t windows = 0;
};

// ingest -> encode -> LOUO train -> infer -> profile, all outputs under out_dir.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Event-driven inference of the quantized model over `samples`.
struct InferenceSummary {
  std::vector<int> predicted;
  double accuracy = 0.0;
  OpCounters counters;
};
InferenceSummary infer_all(const NetworkModel& m, const std::vector<Sample>& samples, int jobs);

ProfileReport build_report(const PipelineConfig& cfg, const InferenceSummary& inf, double accuracy,
                           std::size_t samples);

std::string loss_curve_csv(const TrainResult& r);
std::string folds_csv(const CrossValidation& cv);
std::string predictions_csv(const std::vector<Sample>& samples, const std::vector<int>& predicted);

}  // namespace spikehar
