#include "spikehar/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

#include "spikehar/error.hpp"
#include "spikehar/parallel.hpp"
#include "spikehar/snn_engine.hpp"

namespace spikehar {

namespace {

struct Synapse {
  std::int32_t post;
  std::int32_t widx;
};

// Outgoing synapses of every input neuron of a layer, CSR style.
struct SynapseTable {
  std::vector<std::int32_t> offset;
  std::vector<Synapse> syn;

  std::span<const Synapse> of(int i) const {
    return {syn.data() + offset[static_cast<std::size_t>(i)],
            static_cast<std::size_t>(offset[static_cast<std::size_t>(i) + 1] - offset[static_cast<std::size_t>(i)])};
  }
};

SynapseTable build_table(const LayerSpec& s) {
  SynapseTable t;
  const int n_in = s.in.size();
  t.offset.reserve(static_cast<std::size_t>(n_in) + 1);
  t.offset.push_back(0);
  if (s.kind == LayerKind::dense) {
    const int n_out = s.out.size();
    t.syn.reserve(static_cast<std::size_t>(n_in) * n_out);
    for (int i = 0; i < n_in; ++i) {
      for (int j = 0; j < n_out; ++j) t.syn.push_back({j, j * n_in + i});
      t.offset.push_back(static_cast<std::int32_t>(t.syn.size()));
    }
    return t;
  }
  const int C = s.in.c, W = s.in.w, H = s.in.h, F = s.out.c;
  for (int i = 0; i < n_in; ++i) {
    const int c = i % C, pos = i / C, ih = pos / W, iw = pos % W;
    for (int kh = 0; kh < kKernel; ++kh) {
      const int oh = ih - kh + 1;
      if (oh < 0 || oh >= H) continue;
      for (int kw = 0; kw < kKernel; ++kw) {
        const int ow = iw - kw + 1;
        if (ow < 0 || ow >= W) continue;
        for (int f = 0; f < F; ++f)
          t.syn.push_back({(oh * W + ow) * F + f,
                           static_cast<std::int32_t>(((f * kKernel + kh) * kKernel + kw) * C + c)});
      }
    }
    t.offset.push_back(static_cast<std::int32_t>(t.syn.size()));
  }
  return t;
}

using Topology = std::vector<SynapseTable>;

Topology build_topology(const TrainableModel& m) {
  Topology topo;
  for (const auto& l : m.layers) topo.push_back(build_table(l.spec));
  return topo;
}

struct Entry {
  std::int32_t i;
  double value;
};

// Delayed layer input: buckets[t] lists (input, value) arriving at t.
std::vector<std::vector<Entry>> delayed_inputs(const TrainableLayer& l, std::span<const double> x, std::int64_t T) {
  const int n_in = l.spec.in.size();
  std::vector<std::vector<Entry>> buckets(static_cast<std::size_t>(T));
  for (std::int64_t t = 0; t < T; ++t) {
    const double* row = x.data() + static_cast<std::size_t>(t) * n_in;
    for (int i = 0; i < n_in; ++i) {
      if (row[i] == 0.0) continue;
      const std::int64_t arrive = t + l.delay(i);
      if (arrive < T) buckets[static_cast<std::size_t>(arrive)].push_back({i, row[i]});
    }
  }
  return buckets;
}

bool out_of_state_range(double x) { return x < kernels::kStateMin || x > kernels::kStateMax; }

Trace forward_impl(const TrainableModel& m, const Topology& topo, const SpikeTensor& input, const ForwardOptions& opt) {
  if (input.channel_count() != m.input.size())
    throw ShapeError(0, "input has " + std::to_string(input.channel_count()) + " channels, model expects " +
                            std::to_string(m.input.size()));
  const bool hard = opt.integer_exact || opt.surrogate.mode == SpikeMode::hard;
  const std::int64_t T = input.timesteps();
  const auto& lif = m.lif;
  const double a_u = (4096.0 - lif.decay_u) / 4096.0;
  const double a_v = (4096.0 - lif.decay_v) / 4096.0;
  const double theta = lif.v_threshold;

  Trace tr;
  tr.timesteps = T;
  tr.surrogate = opt.surrogate;
  tr.integer_exact = opt.integer_exact;
  const int n0 = m.input.size();
  tr.input.assign(static_cast<std::size_t>(T) * n0, 0.0);
  for (int c = 0; c < n0; ++c) {
    auto plane = input.plane(c);
    for (std::int64_t t = 0; t < T; ++t)
      if (plane[static_cast<std::size_t>(t)]) tr.input[static_cast<std::size_t>(t) * n0 + c] = 1.0;
  }

  std::vector<double> current;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const TrainableLayer& l = m.layers[li];
    const int n_out = l.spec.out.size();
    std::span<const double> x = li == 0 ? std::span<const double>(tr.input) : std::span<const double>(tr.layers[li - 1].s);
    auto buckets = delayed_inputs(l, x, T);

    LayerTrace lt;
    lt.neurons = n_out;
    const auto cells = static_cast<std::size_t>(T) * n_out;
    lt.u.assign(cells, 0.0);
    lt.p.assign(cells, 0.0);
    lt.s.assign(cells, 0.0);
    lt.refractory.assign(cells, 0);

    std::vector<double> u(n_out, 0.0), v(n_out, 0.0);
    std::vector<int> refr(n_out, 0);
    current.assign(static_cast<std::size_t>(n_out), 0.0);
    const auto& table = topo[li];
    for (std::int64_t t = 0; t < T; ++t) {
      std::fill(current.begin(), current.end(), 0.0);
      for (const auto& e : buckets[static_cast<std::size_t>(t)])
        for (const auto& sy : table.of(e.i)) current[sy.post] += l.weights[sy.widx] * e.value;

      const std::size_t base = static_cast<std::size_t>(t) * n_out;
      for (int j = 0; j < n_out; ++j) {
        double in = current[j];
        double un, pn, sn = 0.0;
        if (opt.integer_exact) {
          in = std::floor(in);
          un = std::floor(u[j] * (4096.0 - lif.decay_u) / 4096.0) + in;
        } else {
          un = a_u * u[j] + in;
        }
        bool in_refractory = false;
        if (hard && refr[j] > 0) {
          --refr[j];
          in_refractory = true;
          pn = v[j];
        } else {
          pn = (opt.integer_exact ? std::floor(v[j] * (4096.0 - lif.decay_v) / 4096.0) : a_v * v[j]) + un;
          sn = hard ? (pn >= theta ? 1.0 : 0.0) : opt.surrogate.soft_spike(pn, theta);
        }
        if (opt.integer_exact && (out_of_state_range(un) || out_of_state_range(pn)))
          throw SaturationError(static_cast<int>(li) + 1, j, out_of_state_range(un) ? "u" : "v");
        u[j] = un;
        v[j] = pn * (1.0 - sn);
        if (hard && sn > 0.0) refr[j] = lif.refractory_steps;
        lt.u[base + j] = un;
        lt.p[base + j] = pn;
        lt.s[base + j] = sn;
        lt.refractory[base + j] = in_refractory;
      }
    }
    tr.layers.push_back(std::move(lt));
  }

  const auto& last = tr.layers.back();
  tr.counts.assign(static_cast<std::size_t>(last.neurons), 0.0);
  for (std::int64_t t = 0; t < T; ++t)
    for (int k = 0; k < last.neurons; ++k) tr.counts[k] += last.s[static_cast<std::size_t>(t) * last.neurons + k];
  return tr;
}

Gradients backward_impl(const TrainableModel& m, const Topology& topo, const Trace& tr, int label,
                        const LossSpec& loss, double loss_scale, bool want_delays) {
  if (tr.layers.size() != m.layers.size() || tr.layers.empty()) throw ConfigError("backward: missing or mismatched trace");
  const int K = m.class_count();
  if (label < 0 || label >= K) throw RangeError("label out of range");
  loss.validate(K);
  const bool hard = tr.integer_exact || tr.surrogate.mode == SpikeMode::hard;
  const std::int64_t T = tr.timesteps;
  const double a_u = (4096.0 - m.lif.decay_u) / 4096.0;
  const double a_v = (4096.0 - m.lif.decay_v) / 4096.0;
  const double theta = m.lif.v_threshold;

  Gradients g = zero_gradients(m);
  g.loss = loss_scale * loss_count(tr.counts, label, loss);

  // dL/ds for the layer being processed, [t * n + j].
  std::vector<double> grad_s(static_cast<std::size_t>(T) * K);
  const double w = loss_scale * loss.class_weights[static_cast<std::size_t>(label)];
  for (int k = 0; k < K; ++k) {
    const double target = k == label ? loss.target_true : loss.target_false;
    const double d = w * (tr.counts[k] - target);
    for (std::int64_t t = 0; t < T; ++t) grad_s[static_cast<std::size_t>(t) * K + k] = d;
  }

  std::vector<double> grad_i;
  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const TrainableLayer& l = m.layers[li];
    const LayerTrace& lt = tr.layers[li];
    const int n_out = lt.neurons;
    const int n_in = l.spec.in.size();

    // Reverse-time pass for dL/dI.
    grad_i.assign(static_cast<std::size_t>(T) * n_out, 0.0);
    std::vector<double> gp_next(n_out, 0.0), gu_next(n_out, 0.0);
    std::vector<std::uint8_t> r_next(n_out, 0);
    for (std::int64_t t = T; t-- > 0;) {
      const std::size_t base = static_cast<std::size_t>(t) * n_out;
      for (int j = 0; j < n_out; ++j) {
        const double gv = (r_next[j] ? 1.0 : a_v) * gp_next[j];
        const bool refr = lt.refractory[base + j] != 0;
        double gp;
        if (refr) {
          gp = gv;
        } else {
          const double p = lt.p[base + j];
          const double s = lt.s[base + j];
          const double fp = tr.surrogate.derivative(p, theta);
          const double dv_dp = hard ? (1.0 - s) : (1.0 - s) - p * fp;
          gp = grad_s[base + j] * fp + gv * dv_dp;
        }
        const double gu = a_u * gu_next[j] + (refr ? 0.0 : gp);
        grad_i[base + j] = gu;
        gp_next[j] = gp;
        gu_next[j] = gu;
        r_next[j] = refr;
      }
    }

    std::span<const double> x = li == 0 ? std::span<const double>(tr.input) : std::span<const double>(tr.layers[li - 1].s);
    const auto& table = topo[li];
    auto buckets = delayed_inputs(l, x, T);
    auto& gw = g.weights[li];
    for (std::int64_t t = 0; t < T; ++t) {
      const double* gi = grad_i.data() + static_cast<std::size_t>(t) * n_out;
      for (const auto& e : buckets[static_cast<std::size_t>(t)])
        for (const auto& sy : table.of(e.i)) gw[sy.widx] += e.value * gi[sy.post];
    }

    const bool need_prev = li > 0;
    if (!need_prev && !want_delays) continue;

    auto grad_delayed = [&](std::int64_t t, int i) {
      const double* gi = grad_i.data() + static_cast<std::size_t>(t) * n_out;
      double acc = 0.0;
      for (const auto& sy : table.of(i)) acc += l.weights[sy.widx] * gi[sy.post];
      return acc;
    };
    auto x_at = [&](std::int64_t t, int i) {
      return (t < 0 || t >= T) ? 0.0 : x[static_cast<std::size_t>(t) * n_in + i];
    };

    std::vector<double> prev_grad;
    if (need_prev) prev_grad.assign(static_cast<std::size_t>(T) * n_in, 0.0);
    auto& gd = g.delays[li];
    for (int i = 0; i < n_in; ++i) {
      const int d = l.delay(i);
      for (std::int64_t t = d; t < T; ++t) {
        const std::int64_t src = t - d;
        // Temporal derivative of the presynaptic signal, central difference.
        const double slope = want_delays ? 0.5 * (x_at(src + 1, i) - x_at(src - 1, i)) : 0.0;
        if (!need_prev && slope == 0.0) continue;
        const double gx = grad_delayed(t, i);
        if (need_prev) prev_grad[static_cast<std::size_t>(src) * n_in + i] = gx;
        if (want_delays) gd[static_cast<std::size_t>(i)] -= gx * slope;
      }
    }
    if (need_prev) grad_s = std::move(prev_grad);
  }
  return g;
}

std::uint64_t tensor_hash(const SpikeTensor& t) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto c : t.cells()) h = (h ^ c) * 1099511628211ull;
  return (h ^ static_cast<std::uint64_t>(t.timesteps())) * 1099511628211ull;
}

}  // namespace

SurrogateShape parse_surrogate_shape(const std::string& s) {
  if (s == "exp" || s == "exponential_pdf") return SurrogateShape::exponential_pdf;
  if (s == "rect" || s == "rectangular") return SurrogateShape::rectangular;
  throw ConfigError("unknown surrogate '" + s + "'");
}

void SurrogateSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("surrogate alpha must be positive");
}

double SurrogateSpec::derivative(double p, double threshold) const {
  const double width = alpha * threshold;
  const double z = p - threshold;
  if (shape == SurrogateShape::exponential_pdf) return std::exp(-std::abs(z) / width) / (2.0 * width);
  return std::abs(z) < width ? 1.0 / (2.0 * width) : 0.0;
}

double SurrogateSpec::soft_spike(double p, double threshold) const {
  const double width = alpha * threshold;
  const double z = p - threshold;
  if (shape == SurrogateShape::exponential_pdf)
    return z < 0 ? 0.5 * std::exp(z / width) : 1.0 - 0.5 * std::exp(-z / width);  // Laplace CDF
  return std::clamp((z + width) / (2.0 * width), 0.0, 1.0);
}

LossSpec LossSpec::defaults_for(std::int64_t timesteps, int class_count) {
  LossSpec s;
  s.target_true = 0.3 * static_cast<double>(timesteps);
  s.target_false = 0.01 * static_cast<double>(timesteps);
  s.class_weights.assign(static_cast<std::size_t>(class_count), 1.0);
  return s;
}

void LossSpec::validate(int class_count) const {
  if (!(target_true > target_false) || target_false < 0.0)
    throw ConfigError("loss targets must satisfy target_true > target_false >= 0");
  if (class_weights.size() != static_cast<std::size_t>(class_count))
    throw ConfigError("class_weights must have one entry per class");
  for (double w : class_weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("class weights must be finite and non-negative");
}

double loss_count(std::span<const double> counts, int label, const LossSpec& spec) {
  if (label < 0 || static_cast<std::size_t>(label) >= counts.size()) throw RangeError("label out of range");
  if (spec.class_weights.size() != counts.size()) throw ConfigError("class_weights size mismatch");
  double sum = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double target = static_cast<int>(c) == label ? spec.target_true : spec.target_false;
    const double d = counts[c] - target;
    sum += d * d;
  }
  return spec.class_weights[static_cast<std::size_t>(label)] * 0.5 * sum;
}

ClassWeights class_weights(std::span<const int> labels, int class_count) {
  ClassWeights cw;
  cw.weights.assign(static_cast<std::size_t>(class_count), 0.0);
  if (labels.empty()) return cw;
  std::vector<std::size_t> n(static_cast<std::size_t>(class_count), 0);
  for (int l : labels) {
    if (l < 0 || l >= class_count) throw RangeError("label out of range");
    ++n[static_cast<std::size_t>(l)];
  }
  const double total = static_cast<double>(labels.size());
  for (int c = 0; c < class_count; ++c) {
    if (n[c] == 0) {
      cw.absent.push_back(c);
      continue;
    }
    cw.weights[c] = total / (static_cast<double>(class_count) * static_cast<double>(n[c]));
  }
  return cw;
}

int TrainableLayer::delay(int i) const {
  const double d = delays[static_cast<std::size_t>(i)];
  return static_cast<int>(std::clamp<long>(std::lround(d), 0, kMaxDelay));
}

std::size_t TrainableModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.delays.size();
  return n;
}

TrainableModel trainable_from(const NetworkModel& m) {
  TrainableModel t;
  t.input = m.input;
  t.lif = m.lif;
  for (const auto& l : m.layers) {
    TrainableLayer tl;
    tl.spec = l.spec;
    tl.weights = dequantize_layer(l);
    tl.delays.assign(l.delays.begin(), l.delays.end());
    t.layers.push_back(std::move(tl));
  }
  return t;
}

NetworkModel quantize_model(const TrainableModel& m) {
  NetworkModel out;
  out.input = m.input;
  out.lif = m.lif;
  for (const auto& l : m.layers) {
    Layer q;
    q.spec = l.spec;
    auto ql = quantize_layer(l.weights);
    q.weights = std::move(ql.weights);
    q.exponent = ql.exponent;
    q.delays.resize(l.delays.size());
    for (std::size_t i = 0; i < l.delays.size(); ++i) q.delays[i] = static_cast<std::uint8_t>(l.delay(static_cast<int>(i)));
    out.layers.push_back(std::move(q));
  }
  require_valid(out);
  return out;
}

TrainableModel init_trainable(const Shape3& input, const std::string& arch, const LifParams& lif, std::uint64_t seed,
                              double gain) {
  const NetworkModel shape = build_model(input, arch, lif);
  TrainableModel m = trainable_from(shape);
  std::mt19937_64 rng(seed);
  for (auto& l : m.layers) {
    const int fan_in = l.spec.kind == LayerKind::dense ? l.spec.in.size() : kKernel * kKernel * l.spec.in.c;
    std::normal_distribution<double> d(0.0, gain * lif.v_threshold / std::sqrt(static_cast<double>(fan_in)));
    for (auto& w : l.weights) w = d(rng);
  }
  return m;
}

Trace forward_with_trace(const TrainableModel& m, const SpikeTensor& input, const ForwardOptions& opt) {
  opt.surrogate.validate();
  return forward_impl(m, build_topology(m), input, opt);
}

Gradients zero_gradients(const TrainableModel& m) {
  Gradients g;
  for (const auto& l : m.layers) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.delays.emplace_back(l.delays.size(), 0.0);
  }
  return g;
}

Gradients backward(const TrainableModel& m, const Trace& trace, int label, const LossSpec& loss, double loss_scale) {
  return backward_impl(m, build_topology(m), trace, label, loss, loss_scale, true);
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
  if (delay_learning_rate < 0.0) throw ConfigError("delay_learning_rate must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (delay_cap < 0 || delay_cap > kMaxDelay) throw ConfigError("delay_cap must be in [0, 62]");
}

TrainResult train(const std::vector<Sample>& data, const TrainConfig& cfg, const SurrogateSpec& surrogate,
                  const LossSpec& loss, const LifParams& lif, const TrainableModel* initial,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  surrogate.validate();
  lif.validate();
  if (data.empty()) throw InsufficientDataError("training set is empty");

  TrainResult res;
  res.model = initial ? *initial : init_trainable(data.front().spikes.signals() > 0
                                                       ? Shape3{data.front().spikes.signals(), data.front().spikes.thresholds(), 2}
                                                       : Shape3{},
                                                   cfg.arch, lif, cfg.seed, cfg.init_gain);
  TrainableModel& m = res.model;
  const int K = m.class_count();
  loss.validate(K);
  for (const auto& s : data)
    if (s.label < 0 || s.label >= K) throw RangeError("sample label " + std::to_string(s.label) + " outside model classes");

  // Canonical order makes results independent of how the caller ordered the data.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> keys(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) keys[i] = tensor_hash(data[i].spikes);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (data[a].subject != data[b].subject) return data[a].subject < data[b].subject;
    if (data[a].label != data[b].label) return data[a].label < data[b].label;
    return keys[a] < keys[b];
  });

  const Topology topo = build_topology(m);
  const ForwardOptions fwd{surrogate, false};
  const double delay_lr = cfg.delay_learning_rate > 0.0 ? cfg.delay_learning_rate : cfg.learning_rate;
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t b = end - start;
      std::vector<Gradients> grads(b);
      std::vector<int> predicted(b);
      parallel_for(b, cfg.jobs, [&](std::size_t k) {
        const Sample& s = data[order[start + k]];
        Trace tr = forward_impl(m, topo, s.spikes, fwd);
        std::vector<std::int64_t> counts(tr.counts.begin(), tr.counts.end());
        predicted[k] = classify(counts);
        grads[k] = backward_impl(m, topo, tr, s.label, loss, 1.0, cfg.train_delays);
      });
      for (std::size_t k = 0; k < b; ++k) {
        if (!std::isfinite(grads[k].loss))
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1));
        loss_sum += grads[k].loss;
        correct += predicted[k] == data[order[start + k]].label;
      }
      const double step = cfg.learning_rate / static_cast<double>(b);
      const double dstep = delay_lr / static_cast<double>(b);
      for (std::size_t li = 0; li < m.layers.size(); ++li) {
        auto& l = m.layers[li];
        for (std::size_t k = 0; k < b; ++k) {
          const auto& gw = grads[k].weights[li];
          for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] -= step * gw[i];
        }
        if (cfg.train_delays) {
          for (std::size_t k = 0; k < b; ++k) {
            const auto& gd = grads[k].delays[li];
            for (std::size_t i = 0; i < l.delays.size(); ++i)
              l.delays[i] = std::clamp(l.delays[i] - dstep * gd[i], 0.0, static_cast<double>(cfg.delay_cap));
          }
        }
        for (double w : l.weights)
          if (!std::isfinite(w)) throw DivergenceError("non-finite weight at epoch " + std::to_string(epoch + 1));
      }
    }
    for (auto& l : m.layers)
      for (auto& d : l.delays) d = std::clamp(std::round(d), 0.0, static_cast<double>(cfg.delay_cap));

    const double mean_loss = loss_sum / static_cast<double>(data.size());
    const double acc = static_cast<double>(correct) / static_cast<double>(data.size());
    res.loss_curve.push_back(mean_loss);
    res.train_accuracy.push_back(acc);
    if (on_epoch) on_epoch(epoch + 1, mean_loss, acc);
    if (cfg.stop_at_accuracy > 0.0 && acc >= cfg.stop_at_accuracy) break;
  }
  return res;
}

std::vector<FoldResult> louo_folds(const std::vector<Sample>& data) {
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < data.size(); ++i) by_subject[data[i].subject].push_back(i);
  if (by_subject.size() < 2) throw ConfigError("leave-one-user-out needs at least 2 distinct subjects");
  std::vector<FoldResult> folds;
  for (const auto& [subject, idx] : by_subject) {
    FoldResult f;
    f.subject = subject;
    f.test_indices = idx;
    f.test_samples = idx.size();
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].subject != subject) f.train_indices.push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

double evaluate_accuracy(const NetworkModel& m, const std::vector<Sample>& data, const std::vector<std::size_t>& indices,
                         int jobs) {
  if (indices.empty()) return 0.0;
  std::vector<int> hit(indices.size(), 0);
  parallel_for(indices.size(), jobs, [&](std::size_t k) {
    const Sample& s = data[indices[k]];
    auto r = run_event_driven(m, s.spikes);
    hit[k] = classify(r.counts) == s.label;
  });
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / static_cast<double>(indices.size());
}

CrossValidation cross_validate(const std::vector<Sample>& data, const TrainConfig& cfg, const SurrogateSpec& surrogate,
                               const LossSpec& loss, const LifParams& lif) {
  CrossValidation cv;
  cv.folds = louo_folds(data);
  // Folds run concurrently; each trains single-threaded.
  TrainConfig fold_cfg = cfg;
  fold_cfg.jobs = 1;
  parallel_for(cv.folds.size(), cfg.jobs, [&](std::size_t f) {
    auto& fold = cv.folds[f];
    std::vector<Sample> train_set;
    train_set.reserve(fold.train_indices.size());
    for (auto i : fold.train_indices) train_set.push_back(data[i]);
    auto result = train(train_set, fold_cfg, surrogate, loss, lif);
    const NetworkModel q = quantize_model(result.model);
    fold.accuracy = evaluate_accuracy(q, data, fold.test_indices, 1);
  });
  double sum = 0.0;
  for (const auto& f : cv.folds) sum += f.accuracy;
  cv.mean_accuracy = sum / static_cast<double>(cv.folds.size());
  return cv;
}

}  // namespace spikehar
