// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <thread>

#include "spikehar/error.hpp"
#include "spikehar/kernels.hpp"
#include "spikehar/pipeline.hpp"
#include "spikehar/profiler.hpp"
#include "spikehar/snn_engine.hpp"
#include "spikehar/synth.hpp"
#include "test_util.hpp"

using namespace spikehar;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void encoder_oracle() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  std::size_t mismatches = 0, events = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto bank = build_bank(kDefaultImuBase * (0.5 + (i % 7) * 0.25), i % 2 ? BankScheme::geometric : BankScheme::arithmetic, 1 + i % 8);
    auto s = testutil::random_walk(rng, 2000, bank.thresholds.back() * 0.8);
    auto got = encode_channel(s, bank);
    auto want = testutil::brute_encode(s, bank.thresholds);
    events += want.size();
    if (got != want) ++mismatches;
  }
  const double secs = seconds_since(t0);
  report(1, "encoder matches literal delta rule", mismatches == 0 && secs < 30,
         fmt("1000 signals x 2000 samples, %.0f mismatching signals, %.0f events, %.2f s", mismatches, events, secs));
}

void encoder_invariants() {
  std::mt19937_64 rng(102);
  const auto banks = default_banks();
  std::size_t violations = 0, spikes = 0;
  for (int w = 0; w < 10000; ++w) {
    SampleMatrix win(120, kChannelCount);
    for (int ch = 0; ch < kChannelCount; ++ch) {
      auto s = testutil::random_walk(rng, win.rows, ch == kImuChannelCount ? 4e-5 : 3e-4);
      for (std::size_t r = 0; r < win.rows; ++r) win(r, ch) = s[r];
    }
    auto t = encode_window(win, banks);
    const int K = t.thresholds();
    for (int s = 0; s < t.signals(); ++s)
      for (std::int64_t step = 0; step < t.timesteps(); ++step)
        for (int k = 0; k < K; ++k) {
          const bool pos = t.at(s, k, 0, step), neg = t.at(s, k, 1, step);
          spikes += pos + neg;
          if (pos && neg) ++violations;  // mutual exclusion
          if (k > 0 && pos && !t.at(s, k - 1, 0, step)) ++violations;  // nesting
          if (k > 0 && neg && !t.at(s, k - 1, 1, step)) ++violations;
        }
  }
  report(2, "encoder mutual exclusion and threshold nesting", violations == 0,
         fmt("10000 windows, %.0f spikes, %.0f violations", spikes, violations));
}

void threshold_banks() {
  const std::vector<double> fig{0.00005, 0.0001, 0.0002, 0.0004, 0.0008};
  const auto g = build_bank(0.00005, BankScheme::geometric, 5);
  const auto a = build_bank(0.00005, BankScheme::arithmetic, 5);
  bool arith = true;
  for (int i = 0; i < 5; ++i) arith &= a.thresholds[i] == 0.00005 * (i + 1);
  report(3, "threshold banks", g.thresholds == fig && arith,
         fmt("geometric exact: %.0f, arithmetic exact: %.0f", g.thresholds == fig, arith));
}

void shape_chain() {
  auto m = build_model({7, 5, 2}, kReferenceArch, LifParams{});
  auto r = validate_model(m);
  report(4, "reference architecture shape chain", r.ok && r.flatten_size == 2240 && m.class_count() == 12,
         fmt("flatten %.0f, outputs %.0f", r.flatten_size, m.class_count()));
}

void backend_equivalence() {
  std::mt19937_64 rng(105);
  const auto t0 = Clock::now();
  int identical = 0, saturated = 0, spiking = 0;
  for (int i = 0; i < 100; ++i) {
    auto m = testutil::random_model(rng, 4, 500, {7, 5, 2});
    const std::int64_t T = std::uniform_int_distribution<int>(1, 200)(rng);
    auto x = testutil::random_tensor(rng, m.input, T, 0.1);
    std::string ed, ee;
    RunResult d, e;
    try {
      d = run_dense(m, x);
    } catch (const SaturationError& err) {
      ed = err.what();
    }
    try {
      e = run_event_driven(m, x);
    } catch (const SaturationError& err) {
      ee = err.what();
    }
    if (!ed.empty() || !ee.empty()) {
      saturated += !ed.empty();
      identical += ed == ee;
      continue;
    }
    bool any = false;
    for (const auto& r : d.layer_rasters)
      for (const auto& step : r) any |= !step.empty();
    spiking += any;
    identical += d.same_spikes(e);
  }
  const double secs = seconds_since(t0);
  report(5, "event-driven and dense backends bit-identical", identical == 100 && secs < 120,
         fmt("%.0f/100 identical (%.0f with hidden spikes), %.1f s", identical, spiking, secs) +
             ", " + std::to_string(saturated) + " saturated identically");
}

void decay_arithmetic() {
  LifParams lif;
  lif.decay_u = 1024;
  lif.decay_v = 0;
  lif.v_threshold = (1 << 23) - 1;
  auto m = build_model({1, 1, 2}, "1D", lif);
  m.layers[0].weights = {64, 0};
  m.layers[0].exponent = 6;  // 64 * 2^6 = 4096
  bool ok = true;
  std::string seq;
  for (const auto* table : {&kernels::scalar_table(), kernels::avx2_table()}) {
    if (!table) continue;
    auto state = NetworkState::reset_for(m);
    std::vector<std::uint8_t> in{1, 0}, none{0, 0};
    std::int64_t expect = 4096;
    for (int t = 0; t < 40; ++t) {
      step_dense(m, state, t == 0 ? in : none, *table);
      const std::int64_t u = state.layers[0].u[0];
      ok &= u == expect;
      if (table == &kernels::scalar_table() && t < 6) seq += std::to_string(u) + ", ";
      expect = expect * 3 / 4;  // exact floor for non-negative values
    }
  }
  report(6, "current decay sequence", ok, seq + "... (40 steps, scalar and vector kernels)");
}

double soft_loss(const TrainableModel& m, const SpikeTensor& x, int label, const LossSpec& loss, const SurrogateSpec& sg) {
  return loss_count(forward_with_trace(m, x, {sg, false}).counts, label, loss);
}

void gradient_check() {
  std::mt19937_64 rng(107);
  int instances = 0;
  double worst = 0;
  for (int trial = 0; trial < 24; ++trial) {
    LifParams lif;
    lif.decay_u = std::uniform_int_distribution<int>(256, 2048)(rng);
    lif.decay_v = std::uniform_int_distribution<int>(64, 1024)(rng);
    lif.v_threshold = 16;
    auto m = init_trainable({2, 2, 2}, trial % 2 ? "2D2D" : "2D", lif, rng(), 1.5);
    for (auto& l : m.layers)
      for (auto& d : l.delays) d = std::uniform_int_distribution<int>(0, 3)(rng);
    if (m.parameter_count() > 30) continue;
    const std::int64_t T = std::uniform_int_distribution<int>(8, 20)(rng);
    auto x = testutil::random_tensor(rng, m.input, T, 0.35);
    SurrogateSpec sg{SurrogateShape::exponential_pdf, 1.0, SpikeMode::soft};
    LossSpec loss = LossSpec::defaults_for(T, m.class_count());
    const int label = trial % m.class_count();
    auto g = backward(m, forward_with_trace(m, x, {sg, false}), label, loss);
    double num = 0, den = 0;
    for (std::size_t li = 0; li < m.layers.size(); ++li)
      for (std::size_t w = 0; w < m.layers[li].weights.size(); ++w) {
        auto plus = m, minus = m;
        const double h = 1e-4;
        plus.layers[li].weights[w] += h;
        minus.layers[li].weights[w] -= h;
        const double fd = (soft_loss(plus, x, label, loss, sg) - soft_loss(minus, x, label, loss, sg)) / (2 * h);
        num += (g.weights[li][w] - fd) * (g.weights[li][w] - fd);
        den += fd * fd;
      }
    if (den == 0) continue;
    ++instances;
    worst = std::max(worst, std::sqrt(num / den));
  }
  report(7, "soft-mode gradients vs central differences", instances >= 20 && worst < 1e-4,
         fmt("%.0f instances (<= 30 parameters, T <= 20), worst relative error %.2e", instances, worst));
}

PipelineConfig desk_config(const fs::path& data, const fs::path& out) {
  Config c = Config::parse("epochs=200\nstop_at_accuracy=1.0\nseed=1\n");
  c.set("data_dir", data.string());
  c.set("out_dir", out.string());
  c.set("jobs", std::to_string(std::max(1u, std::thread::hardware_concurrency())));
  return PipelineConfig::from_config(c);
}

void desk_learning_and_determinism() {
  const fs::path root = testutil::temp_dir("acceptance_pipeline");
  const auto t0 = Clock::now();
  SyntheticSpec spec;  // defaults: 3 classes, 4 subjects, 20 windows each
  write_synthetic(root / "data", spec, generate_synthetic(spec));
  PipelineResult a;
  std::string err;
  try {
    a = run_pipeline(desk_config(root / "data", root / "run_a"));
  } catch (const std::exception& e) {
    err = e.what();
  }
  const double secs = seconds_since(t0);
  std::string folds;
  for (const auto& f : a.cv.folds) folds += fmt("%.3f ", f.accuracy);
  report(8, "desk-scale LOUO learning", err.empty() && a.cv.mean_accuracy >= 0.95 && secs < 300,
         err.empty() ? fmt("%.0f windows, mean LOUO accuracy %.4f, %.1f s, folds: ", static_cast<double>(a.windows),
                           a.cv.mean_accuracy, secs) + folds + "(epoch cap 200)"
                     : err);

  PipelineResult b;
  try {
    b = run_pipeline(desk_config(root / "data", root / "run_b"));
  } catch (const std::exception& e) {
    err = e.what();
  }
  int same = 0, total = 0;
  for (const char* f : {"model.snm", "report.csv", "report.txt", "folds.csv", "loss.csv", "predictions.csv",
                        "spikes/index.csv"}) {
    ++total;
    same += fs::exists(root / "run_a" / f) && slurp(root / "run_a" / f) == slurp(root / "run_b" / f);
  }
  report(11, "pipeline determinism", err.empty() && same == total,
         fmt("%.0f/%.0f output files byte-identical across two seeded runs", same, total));
}

void edp_accounting() {
  auto printed = [](double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return std::stod(buf);
  };
  const double loihi = edp(0.15e-3, 4.4e-3) * 1e6;
  const double gap8 = edp(0.41e-3, 3.2e-3) * 1e6;
  const double stm32 = edp(8.07e-3, 20.88e-3) * 1e6;
  const bool ok = printed(loihi, 2) == 0.66 && printed(gap8, 2) == 1.31 && printed(stm32, 1) == 168.5;
  report(9, "EDP accounting", ok, fmt("%.4f, %.4f, %.4f uJ*s", loihi, gap8, stm32));
}

void quantization_bound() {
  std::mt19937_64 rng(110);
  std::size_t weights = 0, violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = std::uniform_int_distribution<int>(1, 600)(rng);
    const double scale = std::ldexp(1.0, std::uniform_int_distribution<int>(-20, 20)(rng));
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> w(n);
    for (auto& x : w) x = d(rng);
    auto q = quantize_layer(w);
    const double bound = std::ldexp(1.0, q.exponent - 1);
    for (int k = 0; k < n; ++k) {
      ++weights;
      if (std::abs(std::ldexp(static_cast<double>(q.weights[k]), q.exponent) - w[k]) > bound) ++violations;
    }
  }
  report(10, "quantization round-trip bound", violations == 0,
         fmt("1000 layers, %.0f weights, %.0f above 2^(e-1)", weights, violations));
}

}  // namespace

int main() {
  std::printf("kernels: %s\n", std::string(kernels::active().name).c_str());
  encoder_oracle();
  encoder_invariants();
  threshold_banks();
  shape_chain();
  backend_equivalence();
  decay_arithmetic();
  gradient_check();
  edp_accounting();
  quantization_bound();
  desk_learning_and_determinism();
  std::printf("%d criteria failed\n", failures);
  return failures;
}
