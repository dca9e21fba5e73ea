#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "spikehar/error.hpp"
#include "spikehar/snn_model.hpp"
#include "test_util.hpp"

using namespace spikehar;

TEST_CASE("reference architecture validates with flatten 2240 and 12 outputs") {
  for (int features : {2, 10}) {
    auto m = build_model({7, 5, features}, kReferenceArch);
    auto r = validate_model(m);
    CHECK(r.ok);
    CHECK(r.flatten_size == 2240);
    CHECK(m.class_count() == 12);
    REQUIRE(m.layers.size() == 4);
    CHECK(m.layers[0].spec.out == Shape3{7, 5, 32});
    CHECK(m.layers[1].spec.out == Shape3{7, 5, 64});
    CHECK(m.layers[2].spec.out.size() == 128);
  }
}

TEST_CASE("validate_model reports the first inconsistency") {
  auto m = build_model({7, 5, 2}, kReferenceArch);
  m.layers[2].spec.in = {1, 1, 2048};
  m.layers[2].weights.resize(m.layers[2].spec.weight_count());
  m.layers[2].delays.resize(2048);
  auto r = validate_model(m);
  CHECK_FALSE(r.ok);
  CHECK(r.layer == 3);
  CHECK_THROWS_AS(require_valid(m), ShapeError);

  auto d = build_model({7, 5, 2}, kReferenceArch);
  d.layers[1].delays[5] = 63;
  r = validate_model(d);
  CHECK_FALSE(r.ok);
  CHECK(r.layer == 2);

  auto w = build_model({7, 5, 2}, "4C3D");
  w.layers[0].weights.pop_back();
  CHECK(validate_model(w).layer == 1);

  auto lif = build_model({7, 5, 2}, "3D");
  lif.lif.v_threshold = 0;
  CHECK_FALSE(validate_model(lif).ok);
}

// Shape propagator written independently of the validator.
static bool brute_shape_ok(const NetworkModel& m) {
  int h = m.input.h, w = m.input.w, c = m.input.c;
  bool spatial = true;
  for (const auto& l : m.layers) {
    if (l.spec.kind == LayerKind::conv2d) {
      if (!spatial) return false;
      if (l.spec.in.h != h || l.spec.in.w != w || l.spec.in.c != c) return false;
      if (l.spec.out.h != h || l.spec.out.w != w) return false;
      c = l.spec.out.c;
    } else {
      if (l.spec.in.h != 1 || l.spec.in.w != 1 || l.spec.in.c != h * w * c) return false;
      if (l.spec.out.h != 1 || l.spec.out.w != 1) return false;
      spatial = false;
      h = w = 1;
      c = l.spec.out.c;
    }
  }
  return true;
}

TEST_CASE("validator agrees with a brute-force shape propagator") {
  std::mt19937_64 rng(17);
  int accepted = 0, rejected = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto m = testutil::random_model(rng, 4, 200, {3, 2, 2});
    // Perturb some chains.
    if (rng() % 2) {
      auto& l = m.layers[rng() % m.layers.size()];
      switch (rng() % 3) {
        case 0: l.spec.in.c += 1; break;
        case 1: l.spec.out.h += (l.spec.kind == LayerKind::conv2d) ? 1 : 0; break;
        default: l.spec.in.w += 1; break;
      }
      l.weights.resize(l.spec.weight_count());
      l.delays.resize(static_cast<std::size_t>(l.spec.in.size()));
    }
    const bool expect = brute_shape_ok(m);
    CHECK(validate_model(m).ok == expect);
    (expect ? accepted : rejected)++;
  }
  CHECK(accepted > 50);
  CHECK(rejected > 50);
}

TEST_CASE("quantize_weights edge cases") {
  std::vector<double> zeros(10, 0.0);
  auto q = quantize_layer(zeros);
  CHECK(q.exponent == 0);
  for (auto w : q.weights) CHECK(w == 0);

  std::vector<double> w{127.0, -3.4, 50.5, -127.0, 0.49};
  q = quantize_layer(w);
  CHECK(q.exponent == 0);
  CHECK(q.weights == std::vector<std::int8_t>{127, -3, 51, -127, 0});

  std::vector<double> big{1000.0, -1.0};
  q = quantize_layer(big);
  CHECK(q.exponent == 3);  // 1000/8 = 125

  std::vector<double> tiny{0.01, -0.002};
  q = quantize_layer(tiny);
  CHECK(std::ldexp(0.01, -q.exponent) <= 127.0);
  CHECK(std::ldexp(0.01, -(q.exponent - 1)) > 127.0);

  std::vector<double> bad{1.0, std::nan("")};
  CHECK_THROWS_AS(quantize_layer(bad), RangeError);
}

TEST_CASE("quantization round-trip error bound holds exhaustively") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-4, 4)(rng));
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> w(1 + rng() % 500);
    for (auto& x : w) x = d(rng);
    auto q = quantize_layer(w);
    const double bound = std::ldexp(1.0, q.exponent - 1);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(std::ldexp(q.weights[i], q.exponent) - w[i]) <= bound);
  }
}

TEST_CASE("SNM1 round trip preserves the model") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = testutil::random_model(rng, 4, 200, {7, 5, 2});
    m.lif.timestep_ms = 0.5 + trial;
    std::stringstream io;
    write_snm(io, m);
    auto back = read_snm(io);
    CHECK(back.lif == m.lif);
    REQUIRE(back.layers.size() == m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      CHECK(back.layers[i].weights == m.layers[i].weights);
      CHECK(back.layers[i].delays == m.layers[i].delays);
      CHECK(back.layers[i].exponent == m.layers[i].exponent);
      CHECK(back.layers[i].spec.in == m.layers[i].spec.in);
      CHECK(back.layers[i].spec.out == m.layers[i].spec.out);
    }
  }
  std::istringstream bad("SNM1\x02\x00");
  CHECK_THROWS_AS(read_snm(bad), FormatError);
}

TEST_CASE("LIF parameters from key=value config") {
  std::map<std::string, std::string> kv{{"v_threshold", "200"}, {"decay_u", "512"}, {"timestep_ms", "0.5"}};
  auto p = lif_from_config(kv);
  CHECK(p.v_threshold == 200);
  CHECK(p.decay_u == 512);
  CHECK(p.decay_v == 128);
  CHECK(p.timestep_ms == 0.5);
  kv["decay_v"] = "5000";
  CHECK_THROWS_AS(lif_from_config(kv), ConfigError);
  kv["decay_v"] = "abc";
  CHECK_THROWS_AS(lif_from_config(kv), ConfigError);
}

TEST_CASE("fanout counts valid synapses") {
  auto m = build_model({7, 5, 2}, "4C128D");
  // Corner input neuron reaches a 2x2 neighbourhood, centre a 3x3 one.
  CHECK(m.layers[0].fanout(0) == 4 * 4);
  CHECK(m.layers[0].fanout(((3 * 5) + 2) * 2 + 1) == 9 * 4);
  CHECK(m.layers[1].fanout(17) == 128);
}
