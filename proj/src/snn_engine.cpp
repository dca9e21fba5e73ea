#include "spikehar/snn_engine.hpp"

#include <algorithm>
#include <cstring>

#include "spikehar/error.hpp"

namespace spikehar {

namespace {

constexpr int kRing = kMaxDelay + 1;

int ring_slot(std::int64_t t) { return static_cast<int>(((t % kRing) + kRing) % kRing); }

void check_input(const NetworkModel& m, const SpikeTensor& input) {
  if (input.channel_count() != m.input.size())
    throw ShapeError(0, "input has " + std::to_string(input.channel_count()) + " channels, model expects " +
                            std::to_string(m.input.size()));
}

// Re-runs the scalar step from saved state to name the first neuron that overflowed.
[[noreturn]] void report_overflow(int layer, std::span<const std::int32_t> u, std::span<const std::int32_t> v,
                                  std::span<const std::int32_t> r, std::span<const std::int32_t> input,
                                  const kernels::LifConstants& k) {
  for (std::size_t j = 0; j < u.size(); ++j) {
    std::int32_t uu = u[j], vv = v[j], rr = r[j];
    std::uint8_t s = 0;
    if (!kernels::lif_step_one(uu, vv, rr, input[j], s, k)) {
      const bool u_bad = uu < kernels::kStateMin || uu > kernels::kStateMax;
      throw SaturationError(layer, static_cast<int>(j), u_bad ? "u" : "v");
    }
  }
  throw SaturationError(layer, -1, "u/v");
}

void synaptic_sums_dense(const Layer& l, std::span<const std::uint8_t> x, std::span<std::int64_t> sums,
                         const kernels::KernelTable& k) {
  const auto& s = l.spec;
  if (s.kind == LayerKind::dense) {
    const auto n_in = static_cast<std::size_t>(s.in.size());
    for (int j = 0; j < s.out.size(); ++j)
      sums[j] = k.dot_spikes(x.data(), l.weights.data() + static_cast<std::size_t>(j) * n_in, n_in);
    return;
  }
  const int H = s.in.h, W = s.in.w, C = s.in.c, F = s.out.c;
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w)
      for (int f = 0; f < F; ++f) {
        std::int64_t acc = 0;
        for (int kh = 0; kh < kKernel; ++kh) {
          const int ih = h + kh - 1;
          if (ih < 0 || ih >= H) continue;
          for (int kw = 0; kw < kKernel; ++kw) {
            const int iw = w + kw - 1;
            if (iw < 0 || iw >= W) continue;
            acc += k.dot_spikes(x.data() + (static_cast<std::size_t>(ih) * W + iw) * C,
                                l.weights.data() + l.conv_index(f, kh, kw, 0), static_cast<std::size_t>(C));
          }
        }
        sums[(static_cast<std::size_t>(h) * W + w) * F + f] = acc;
      }
}

}  // namespace

kernels::LifConstants lif_constants(const LifParams& p) {
  return {kernels::kDecayOne - p.decay_u, kernels::kDecayOne - p.decay_v, p.v_threshold, p.refractory_steps};
}

NetworkState NetworkState::reset_for(const NetworkModel& m) {
  NetworkState st;
  for (const auto& l : m.layers) {
    const auto n = static_cast<std::size_t>(l.spec.out.size());
    st.layers.push_back({std::vector<std::int32_t>(n, 0), std::vector<std::int32_t>(n, 0),
                         std::vector<std::int32_t>(n, 0)});
    st.history.emplace_back(static_cast<std::size_t>(kRing) * l.spec.in.size(), 0);
    st.last_spikes.emplace_back(n, 0);
  }
  return st;
}

std::vector<std::uint8_t> step_dense(const NetworkModel& m, NetworkState& state,
                                     std::span<const std::uint8_t> input_spikes, const kernels::KernelTable& k) {
  if (state.layers.size() != m.layers.size()) throw ConfigError("state not initialised for this model");
  if (static_cast<int>(input_spikes.size()) != m.input.size())
    throw ShapeError(0, "input frame size " + std::to_string(input_spikes.size()) + " != " +
                            std::to_string(m.input.size()));
  const auto lc = lif_constants(m.lif);
  const std::int64_t t = state.t;
  std::vector<std::uint8_t> frame(input_spikes.begin(), input_spikes.end());
  std::vector<std::uint8_t> delayed;
  std::vector<std::int64_t> sums;
  std::vector<std::int32_t> current;

  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const Layer& l = m.layers[li];
    const auto n_in = static_cast<std::size_t>(l.spec.in.size());
    const auto n_out = static_cast<std::size_t>(l.spec.out.size());
    auto& hist = state.history[li];
    std::memcpy(hist.data() + static_cast<std::size_t>(ring_slot(t)) * n_in, frame.data(), n_in);
    delayed.resize(n_in);
    for (std::size_t i = 0; i < n_in; ++i)
      delayed[i] = hist[static_cast<std::size_t>(ring_slot(t - l.delays[i])) * n_in + i];

    sums.assign(n_out, 0);
    synaptic_sums_dense(l, delayed, sums, k);
    current.resize(n_out);
    for (std::size_t j = 0; j < n_out; ++j) current[j] = scale_current(sums[j], l.exponent);

    NeuronState& ns = state.layers[li];
    const NeuronState saved = ns;
    auto& spikes = state.last_spikes[li];
    if (!k.lif_update(ns.u.data(), ns.v.data(), ns.refractory_remaining.data(), current.data(), spikes.data(),
                      n_out, lc)) {
      report_overflow(static_cast<int>(li) + 1, saved.u, saved.v, saved.refractory_remaining, current, lc);
    }
    frame.assign(spikes.begin(), spikes.end());
  }
  ++state.t;
  return frame;
}

RunResult run_dense(const NetworkModel& m, const SpikeTensor& input, const kernels::KernelTable& k) {
  require_valid(m);
  check_input(m, input);
  NetworkState st = NetworkState::reset_for(m);
  RunResult r;
  r.timesteps = input.timesteps();
  r.counts.assign(static_cast<std::size_t>(m.class_count()), 0);
  r.layer_rasters.assign(m.layers.size(), Raster(static_cast<std::size_t>(input.timesteps())));
  r.input_raster.resize(static_cast<std::size_t>(input.timesteps()));

  std::vector<std::uint8_t> frame(static_cast<std::size_t>(m.input.size()));
  for (std::int64_t t = 0; t < input.timesteps(); ++t) {
    input.frame(t, frame);
    for (std::size_t i = 0; i < frame.size(); ++i)
      if (frame[i]) r.input_raster[t].push_back(static_cast<std::int32_t>(i));
    step_dense(m, st, frame, k);
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
      const auto& s = st.last_spikes[li];
      auto& row = r.layer_rasters[li][t];
      for (std::size_t j = 0; j < s.size(); ++j)
        if (s[j]) row.push_back(static_cast<std::int32_t>(j));
      r.neuron_updates += s.size();
    }
    for (auto j : r.layer_rasters.back()[t]) ++r.counts[static_cast<std::size_t>(j)];
  }
  // Deliveries that landed inside the window, as the event backend counts them.
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const Raster& src = li == 0 ? r.input_raster : r.layer_rasters[li - 1];
    const Layer& l = m.layers[li];
    for (std::int64_t t = 0; t < r.timesteps; ++t)
      for (auto i : src[t])
        if (t + l.delays[i] < r.timesteps) r.synaptic_deliveries += static_cast<std::uint64_t>(l.fanout(i));
  }
  return r;
}

namespace {

struct EventLayer {
  const Layer* layer = nullptr;
  std::vector<std::int8_t> scatter;  // dense: [in][out]; conv: [in_c][kh][kw][out_c]
  std::vector<std::vector<std::int32_t>> buckets = std::vector<std::vector<std::int32_t>>(kRing);
  std::vector<std::int32_t> acc;
  std::vector<std::uint8_t> flagged;
  std::vector<std::int32_t> active;
  NeuronState state;
};

EventLayer make_event_layer(const Layer& l) {
  EventLayer e;
  e.layer = &l;
  const auto& s = l.spec;
  const auto n_out = static_cast<std::size_t>(s.out.size());
  e.acc.assign(n_out, 0);
  e.flagged.assign(n_out, 0);
  e.state = {std::vector<std::int32_t>(n_out, 0), std::vector<std::int32_t>(n_out, 0),
             std::vector<std::int32_t>(n_out, 0)};
  e.scatter.resize(l.weights.size());
  if (s.kind == LayerKind::dense) {
    const auto n_in = static_cast<std::size_t>(s.in.size());
    for (std::size_t j = 0; j < n_out; ++j)
      for (std::size_t i = 0; i < n_in; ++i) e.scatter[i * n_out + j] = l.weights[j * n_in + i];
  } else {
    const int C = s.in.c, F = s.out.c;
    for (int f = 0; f < F; ++f)
      for (int kh = 0; kh < kKernel; ++kh)
        for (int kw = 0; kw < kKernel; ++kw)
          for (int c = 0; c < C; ++c)
            e.scatter[((static_cast<std::size_t>(c) * kKernel + kh) * kKernel + kw) * F + f] =
                l.weights[l.conv_index(f, kh, kw, c)];
  }
  return e;
}

void mark(EventLayer& e, std::int32_t j) {
  if (!e.flagged[j]) {
    e.flagged[j] = 1;
    e.active.push_back(j);
  }
}

// Scatters one arriving presynaptic spike into the accumulators.
std::uint64_t deliver(EventLayer& e, std::int32_t i, const kernels::KernelTable& k) {
  const auto& s = e.layer->spec;
  if (s.kind == LayerKind::dense) {
    const auto n_out = static_cast<std::size_t>(s.out.size());
    k.accumulate(e.acc.data(), e.scatter.data() + static_cast<std::size_t>(i) * n_out, n_out);
    for (std::size_t j = 0; j < n_out; ++j) mark(e, static_cast<std::int32_t>(j));
    return n_out;
  }
  const int C = s.in.c, F = s.out.c, W = s.in.w, H = s.in.h;
  const int c = i % C;
  const int pos = i / C;
  const int ih = pos / W, iw = pos % W;
  std::uint64_t n = 0;
  for (int kh = 0; kh < kKernel; ++kh) {
    const int oh = ih - kh + 1;
    if (oh < 0 || oh >= H) continue;
    for (int kw = 0; kw < kKernel; ++kw) {
      const int ow = iw - kw + 1;
      if (ow < 0 || ow >= W) continue;
      const auto base = (static_cast<std::size_t>(oh) * W + ow) * F;
      k.accumulate(e.acc.data() + base,
                   e.scatter.data() + ((static_cast<std::size_t>(c) * kKernel + kh) * kKernel + kw) * F,
                   static_cast<std::size_t>(F));
      for (int f = 0; f < F; ++f) mark(e, static_cast<std::int32_t>(base + f));
      n += static_cast<std::uint64_t>(F);
    }
  }
  return n;
}

}  // namespace

RunResult run_event_driven(const NetworkModel& m, const SpikeTensor& input) {
  require_valid(m);
  check_input(m, input);
  const auto& k = kernels::active();
  const auto lc = lif_constants(m.lif);

  std::vector<EventLayer> layers;
  layers.reserve(m.layers.size());
  for (const auto& l : m.layers) layers.push_back(make_event_layer(l));

  RunResult r;
  r.timesteps = input.timesteps();
  r.counts.assign(static_cast<std::size_t>(m.class_count()), 0);
  r.layer_rasters.assign(m.layers.size(), Raster(static_cast<std::size_t>(input.timesteps())));
  r.input_raster.resize(static_cast<std::size_t>(input.timesteps()));

  std::vector<std::int32_t> incoming;
  std::vector<int> active_in;
  for (std::int64_t t = 0; t < input.timesteps(); ++t) {
    input.active_at(t, active_in);
    incoming.assign(active_in.begin(), active_in.end());
    r.input_raster[t] = incoming;

    for (std::size_t li = 0; li < layers.size(); ++li) {
      EventLayer& e = layers[li];
      const Layer& l = *e.layer;
      for (auto i : incoming) e.buckets[ring_slot(t + l.delays[i])].push_back(i);

      auto& due = e.buckets[ring_slot(t)];
      for (auto i : due) r.synaptic_deliveries += deliver(e, i, k);
      due.clear();

      std::sort(e.active.begin(), e.active.end());
      std::vector<std::int32_t> still;
      auto& row = r.layer_rasters[li][t];
      for (auto j : e.active) {
        const std::int32_t in = scale_current(e.acc[j], l.exponent);
        e.acc[j] = 0;
        auto& u = e.state.u[j];
        auto& v = e.state.v[j];
        auto& rr = e.state.refractory_remaining[j];
        const std::int32_t u0 = u, v0 = v, r0 = rr;
        std::uint8_t spike = 0;
        if (!kernels::lif_step_one(u, v, rr, in, spike, lc)) {
          std::int32_t uu = u0, vv = v0, rq = r0;
          std::uint8_t s2 = 0;
          kernels::lif_step_one(uu, vv, rq, in, s2, lc);
          const bool u_bad = uu < kernels::kStateMin || uu > kernels::kStateMax;
          throw SaturationError(static_cast<int>(li) + 1, j, u_bad ? "u" : "v");
        }
        ++r.neuron_updates;
        if (spike) row.push_back(j);
        if (u != 0 || v != 0 || rr != 0) {
          still.push_back(j);
        } else {
          e.flagged[j] = 0;
        }
      }
      e.active = std::move(still);
      incoming = row;
    }
    for (auto j : incoming) ++r.counts[static_cast<std::size_t>(j)];
  }
  return r;
}

int classify(std::span<const std::int64_t> counts) {
  if (counts.empty()) throw ConfigError("classify: empty count vector");
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

}  // namespace spikehar
