#include <doctest.h>

#include <random>

#include "sim_oracle.hpp"
#include "spikehar/error.hpp"
#include "spikehar/snn_engine.hpp"
#include "test_util.hpp"

using namespace spikehar;

namespace {

// One input channel, one output neuron, weight w, delay d.
NetworkModel single_synapse(int w, int d, int threshold) {
  auto m = build_model({1, 1, 1}, "1D");
  m.lif.v_threshold = threshold;
  m.layers[0].weights[0] = static_cast<std::int8_t>(w);
  m.layers[0].delays[0] = static_cast<std::uint8_t>(d);
  return m;
}

SpikeTensor one_hot_input(int channels_h, int channels_w, std::int64_t T, int flat, std::int64_t t) {
  SpikeTensor x(channels_h, channels_w, T);
  x.set(flat / 2 / channels_w, (flat / 2) % channels_w, flat % 2, t);
  return x;
}

}  // namespace

TEST_CASE("step_dense: a spike of weight v_threshold fires immediately") {
  auto m = single_synapse(64, 0, 64);
  auto st = NetworkState::reset_for(m);
  std::vector<std::uint8_t> in{1};
  auto out = step_dense(m, st, in);
  CHECK(out == std::vector<std::uint8_t>{1});
  CHECK(st.layers[0].u[0] == 64);
  CHECK(st.layers[0].v[0] == 0);  // reset after firing
}

TEST_CASE("step_dense: current decays by 3/4 with decay_u 1024") {
  auto m = single_synapse(0, 0, 1 << 22);
  auto st = NetworkState::reset_for(m);
  st.layers[0].u[0] = 4096;
  std::vector<std::uint8_t> in{0};
  step_dense(m, st, in);
  CHECK(st.layers[0].u[0] == 3072);
}

TEST_CASE("step_dense reports saturation with layer and neuron") {
  auto m = build_model({1, 1, 1}, "3D");
  m.lif.v_threshold = 1 << 23;
  m.lif.decay_u = 0;
  m.lif.decay_v = 0;
  m.layers[0].weights = {1, 2, 3};
  m.layers[0].exponent = 16;
  auto st = NetworkState::reset_for(m);
  std::vector<std::uint8_t> in{1};
  try {
    for (int i = 0; i < 100; ++i) step_dense(m, st, in);
    FAIL("expected saturation");
  } catch (const SaturationError& e) {
    CHECK(e.layer() == 1);
    CHECK(e.neuron() == 2);
  }
}

TEST_CASE("run_dense and run_event_driven on zero input") {
  auto m = build_model({7, 5, 2}, "4C8D3D");
  std::mt19937_64 rng(1);
  for (auto& l : m.layers)
    for (auto& w : l.weights) w = static_cast<std::int8_t>(static_cast<int>(rng() % 256) - 128);
  SpikeTensor zero(7, 5, 100);
  auto a = run_dense(m, zero);
  auto b = run_event_driven(m, zero);
  CHECK(a.counts == std::vector<std::int64_t>{0, 0, 0});
  CHECK(b.same_spikes(a));
  CHECK(b.synaptic_deliveries == 0);
  CHECK(b.neuron_updates == 0);
}

TEST_CASE("single spike arrives after its axonal delay") {
  auto m = single_synapse(100, 7, 64);
  m.input = {1, 1, 2};
  m.layers[0].spec.in = {1, 1, 2};
  m.layers[0].weights = {100, 0};
  m.layers[0].delays = {7, 0};
  m.lif.decay_u = 4096;  // current lasts one step, so exactly one output spike
  SpikeTensor x(1, 1, 20);
  x.set(0, 0, 0, 3);
  auto r = run_dense(m, x);
  CHECK(r.counts == std::vector<std::int64_t>{1});
  REQUIRE(r.layer_rasters[0][10].size() == 1);
  CHECK(r.layer_rasters[0][10][0] == 0);
  CHECK(run_event_driven(m, x).same_spikes(r));

  // A spike delayed past the window never arrives.
  x = SpikeTensor(1, 1, 20);
  x.set(0, 0, 0, 15);
  CHECK(run_dense(m, x).counts == std::vector<std::int64_t>{0});
  CHECK(run_event_driven(m, x).counts == std::vector<std::int64_t>{0});
}

TEST_CASE("input shape mismatch is an error") {
  auto m = build_model({7, 5, 2}, "3D");
  SpikeTensor x(7, 4, 10);
  CHECK_THROWS_AS(run_dense(m, x), ShapeError);
  CHECK_THROWS_AS(run_event_driven(m, x), ShapeError);
}

TEST_CASE("backends match the independent scalar oracle") {
  std::mt19937_64 rng(42);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Shape3 in{3, 2, 2};
    auto m = testutil::random_model(rng, 3, 120, in);
    auto x = testutil::random_tensor(rng, in, 50, 0.15);
    auto oracle = testutil::oracle_run(m, x);
    if (oracle.overflow) {
      CHECK_THROWS_AS(run_dense(m, x), SaturationError);
      CHECK_THROWS_AS(run_event_driven(m, x), SaturationError);
      continue;
    }
    ++compared;
    auto dense_scalar = run_dense(m, x, kernels::scalar_table());
    auto dense = run_dense(m, x);
    auto events = run_event_driven(m, x);
    CHECK(dense_scalar.counts == oracle.counts);
    CHECK(dense_scalar.layer_rasters == oracle.rasters);
    CHECK(dense.same_spikes(dense_scalar));
    CHECK(events.same_spikes(dense_scalar));
    CHECK(events.synaptic_deliveries == dense.synaptic_deliveries);
    CHECK(events.neuron_updates <= dense.neuron_updates);
  }
  CHECK(compared > 30);
}

TEST_CASE("run_dense equals step_dense composed over time") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = testutil::random_model(rng, 3, 100, {7, 5, 2});
    auto x = testutil::random_tensor(rng, {7, 5, 2}, 40, 0.1);
    RunResult r;
    try {
      r = run_dense(m, x);
    } catch (const SaturationError&) {
      continue;
    }
    auto st = NetworkState::reset_for(m);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(m.class_count()), 0);
    std::vector<std::uint8_t> frame(70);
    for (std::int64_t t = 0; t < 40; ++t) {
      x.frame(t, frame);
      auto out = step_dense(m, st, frame);
      for (std::size_t j = 0; j < out.size(); ++j) counts[j] += out[j];
    }
    CHECK(counts == r.counts);
  }
}

TEST_CASE("dynamics properties: decay monotone, reset, linearity, determinism") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = testutil::random_model(rng, 2, 60, {3, 2, 2});
    m.lif.refractory_steps = 0;
    auto x = testutil::random_tensor(rng, {3, 2, 2}, 30, 0.2);
    // Pad with silence long enough for every delay to drain.
    SpikeTensor padded(3, 2, 130);
    for (int s = 0; s < 3; ++s)
      for (int k = 0; k < 2; ++k)
        for (int p = 0; p < 2; ++p)
          for (int t = 0; t < 30; ++t)
            if (x.at(s, k, p, t)) padded.set(s, k, p, t);
    auto o = testutil::oracle_run(m, padded);
    if (o.overflow) continue;

    // Reset: a neuron spiking at t enters t+1 with v = 0.
    for (std::size_t l = 0; l < m.layers.size(); ++l)
      for (std::size_t t = 0; t < 130; ++t)
        for (auto j : o.rasters[l][t]) CHECK(o.v_trace[l][t][j] == 0);

    auto a = run_dense(m, padded);
    auto b = run_dense(m, padded);
    CHECK(a.same_spikes(b));
  }

  // Linearity below threshold: doubling even weights doubles u exactly. The
  // floored decay is only exact for keep factors 1 and 0.
  for (int trial = 0; trial < 20; ++trial) {
    auto m = build_model({3, 2, 2}, "5D");
    m.lif.v_threshold = (1 << 23) - 1;
    m.lif.decay_u = trial % 2 ? 0 : 4096;
    for (auto& w : m.layers[0].weights) w = static_cast<std::int8_t>(2 * (static_cast<int>(rng() % 60) - 30));
    for (auto& d : m.layers[0].delays) d = static_cast<std::uint8_t>(rng() % 4);
    auto m2 = m;
    for (auto& w : m2.layers[0].weights) w = static_cast<std::int8_t>(w * 2);
    auto x = testutil::random_tensor(rng, {3, 2, 2}, 40, 0.2);
    auto o1 = testutil::oracle_run(m, x);
    auto o2 = testutil::oracle_run(m2, x);
    for (std::size_t t = 0; t < 40; ++t)
      for (std::size_t j = 0; j < 5; ++j) CHECK(o2.u_trace[0][t][j] == 2 * o1.u_trace[0][t][j]);
  }
}

TEST_CASE("zero input never grows |u|, nor |v| while u is zero") {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = build_model({1, 1, 1}, "8D");
    m.lif.decay_u = static_cast<std::int32_t>(rng() % 4097);
    m.lif.decay_v = static_cast<std::int32_t>(rng() % 4097);
    m.lif.v_threshold = 1 << 22;
    auto st = NetworkState::reset_for(m);
    const bool zero_u = trial % 2 == 0;
    for (int j = 0; j < 8; ++j) {
      st.layers[0].u[j] = zero_u ? 0 : static_cast<std::int32_t>(rng() % 200001) - 100000;
      st.layers[0].v[j] = static_cast<std::int32_t>(rng() % 200001) - 100000;
    }
    std::vector<std::uint8_t> in{0};
    for (int t = 0; t < 50; ++t) {
      auto before = st.layers[0];
      step_dense(m, st, in);
      for (int j = 0; j < 8; ++j) {
        CHECK(std::abs(st.layers[0].u[j]) <= std::abs(before.u[j]));
        if (zero_u) CHECK(std::abs(st.layers[0].v[j]) <= std::abs(before.v[j]));
      }
    }
  }
}

TEST_CASE("classify: argmax with lowest-index ties") {
  std::vector<std::int64_t> a{0, 0, 0, 0, 0, 9, 0, 0, 0, 0, 0, 0};
  CHECK(classify(a) == 5);
  std::vector<std::int64_t> b{3, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(classify(b) == 0);
  CHECK_THROWS_AS(classify(std::vector<std::int64_t>{}), ConfigError);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::int64_t> c(12);
    for (auto& x : c) x = static_cast<std::int64_t>(rng() % 6);
    int best = 0;
    for (int i = 0; i < 12; ++i)
      if (c[i] > c[best]) best = i;
    CHECK(classify(c) == best);
    // Strictly monotone transform leaves the argmax alone.
    std::vector<std::int64_t> t(12);
    for (int i = 0; i < 12; ++i) t[i] = 3 * c[i] * c[i] + 7;
    CHECK(classify(t) == best);
  }
}
