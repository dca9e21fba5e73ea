#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spikehar/snn_model.hpp"
#include "spikehar/spike_encoder.hpp"

namespace spikehar {

enum class SurrogateShape { exponential_pdf, rectangular };
enum class SpikeMode { hard, soft };

SurrogateShape parse_surrogate_shape(const std::string& s);

struct SurrogateSpec {
  SurrogateShape shape = SurrogateShape::exponential_pdf;
  double alpha = 1.0;  // width in units of v_threshold
  SpikeMode mode = SpikeMode::hard;

  void validate() const;
  // Surrogate derivative at pre-reset voltage p.
  double derivative(double p, double threshold) const;
  // Smooth spike used in soft mode; its derivative is exactly derivative().
  double soft_spike(double p, double threshold) const;
};

struct LossSpec {
  double target_true = 0.0;   // spike count for the labelled class
  double target_false = 0.0;  // spike count for every other class
  std::vector<double> class_weights;

  // 0.3*T and 0.01*T for a window of T output steps, unit weights.
  static LossSpec defaults_for(std::int64_t timesteps, int class_count);
  void validate(int class_count) const;
};

// class_weights[label] * 1/2 * sum_c (counts_c - target_c)^2
double loss_count(std::span<const double> counts, int label, const LossSpec& spec);

struct ClassWeights {
  std::vector<double> weights;
  std::vector<int> absent;  // classes with no samples (weight 0)
};

// weight_c = N / (K * N_c) for present classes.
ClassWeights class_weights(std::span<const int> labels, int class_count = 12);

// Real-valued weights and delays in the same units as the integer engine
// (one weight unit adds one unit of current).
struct TrainableLayer {
  LayerSpec spec;
  std::vector<double> weights;
  std::vector<double> delays;

  int delay(int i) const;  // nearest integer, clamped to [0, 62]
};

struct TrainableModel {
  Shape3 input;
  std::vector<TrainableLayer> layers;
  LifParams lif;

  int class_count() const { return layers.empty() ? 0 : layers.back().spec.out.size(); }
  std::size_t parameter_count() const;
};

TrainableModel trainable_from(const NetworkModel& m);
// Quantizes weights per layer and rounds delays.
NetworkModel quantize_model(const TrainableModel& m);
// Gaussian weights with std = gain * v_threshold / sqrt(fan_in).
TrainableModel init_trainable(const Shape3& input, const std::string& arch, const LifParams& lif,
                              std::uint64_t seed, double gain);

struct ForwardOptions {
  SurrogateSpec surrogate;
  // Reproduce the integer engine: floored currents and decays, 24-bit checks.
  bool integer_exact = false;
};

struct LayerTrace {
  int neurons = 0;
  std::vector<double> u;  // [t * neurons + j]
  std::vector<double> p;  // voltage before reset
  std::vector<double> s;  // spike (0/1, or soft value)
  std::vector<std::uint8_t> refractory;
};

struct Trace {
  std::int64_t timesteps = 0;
  std::vector<double> input;  // [t * inputs + i]
  std::vector<LayerTrace> layers;
  std::vector<double> counts;
  SurrogateSpec surrogate;
  bool integer_exact = false;
};

Trace forward_with_trace(const TrainableModel& m, const SpikeTensor& input, const ForwardOptions& opt = {});

struct Gradients {
  std::vector<std::vector<double>> weights;  // congruent with layer weights
  std::vector<std::vector<double>> delays;
  double loss = 0.0;
};

Gradients zero_gradients(const TrainableModel& m);

// Error credit through layers and time. `loss_scale` multiplies the loss.
Gradients backward(const TrainableModel& m, const Trace& trace, int label, const LossSpec& loss,
                   double loss_scale = 1.0);

struct Sample {
  SpikeTensor spikes;
  int label = 0;
  std::string subject;
};

struct TrainConfig {
  double learning_rate = 3e-5;  // suits count losses over ~2000-step windows
  double delay_learning_rate = 0.0;  // 0: follow learning_rate
  int epochs = 50;
  int batch_size = 8;
  std::uint64_t seed = 1;
  bool train_delays = true;
  int delay_cap = kMaxDelay;
  double init_gain = 1.0;
  std::string arch = kReferenceArch;
  // Stop once an epoch's running train accuracy reaches this (0 disables).
  double stop_at_accuracy = 0.0;
  int jobs = 1;

  void validate() const;
};

struct TrainResult {
  TrainableModel model;
  std::vector<double> loss_curve;      // mean loss per epoch
  std::vector<double> train_accuracy;  // running accuracy per epoch
};

using EpochCallback = std::function<void(int epoch, double loss, double accuracy)>;

// Starts from `initial` when given, otherwise from init_trainable(cfg.arch).
TrainResult train(const std::vector<Sample>& data, const TrainConfig& cfg, const SurrogateSpec& surrogate,
                  const LossSpec& loss, const LifParams& lif, const TrainableModel* initial = nullptr,
                  const EpochCallback& on_epoch = {});

struct FoldResult {
  std::string subject;
  std::size_t test_samples = 0;
  double accuracy = 0.0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

struct CrossValidation {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
};

// Partition only: one fold per distinct subject, ordered by subject id.
std::vector<FoldResult> louo_folds(const std::vector<Sample>& data);

// Leave-one-user-out: trains on all other subjects, evaluates the quantized
// model with the event-driven engine on the held-out subject.
CrossValidation cross_validate(const std::vector<Sample>& data, const TrainConfig& cfg,
                               const SurrogateSpec& surrogate, const LossSpec& loss, const LifParams& lif);

double evaluate_accuracy(const NetworkModel& m, const std::vector<Sample>& data,
                         const std::vector<std::size_t>& indices, int jobs = 1);

}  // namespace spikehar
