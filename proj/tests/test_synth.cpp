#include <doctest.h>

#include <fstream>
#include <iterator>
#include <json.hpp>
#include <map>
#include <set>
#include <tuple>

#include "spikehar/error.hpp"
#include "spikehar/pipeline.hpp"
#include "spikehar/synth.hpp"
#include "test_util.hpp"

using namespace spikehar;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Independent frequency estimate: sign changes of the mean-removed signal.
double zero_crossing_hz(const std::vector<double>& x, double rate_hz) {
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  int crossings = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if ((x[i - 1] - mean < 0) != (x[i] - mean < 0)) ++crossings;
  const double duration = static_cast<double>(x.size() - 1) / rate_hz;
  return crossings / (2.0 * duration);
}

}  // namespace

TEST_CASE("default synthetic set yields 240 windows") {
  auto dir = testutil::temp_dir("synth_default");
  SyntheticSpec spec;
  write_synthetic(dir, spec, generate_synthetic(spec));
  auto windows = ingest_dir(dir, ResampleSpec{}, WindowSpec{});
  CHECK(windows.size() == 240);
  std::map<std::pair<std::string, int>, int> per;
  for (const auto& w : windows) ++per[{w.subject, w.window.label}];
  CHECK(per.size() == 12);
  for (const auto& [k, n] : per) CHECK(n == 20);
}

TEST_CASE("synthetic output is byte-identical for a fixed seed") {
  SyntheticSpec spec;
  spec.windows_per_class = 3;
  auto a = testutil::temp_dir("synth_a");
  auto b = testutil::temp_dir("synth_b");
  auto c = testutil::temp_dir("synth_c");
  write_synthetic(a, spec, generate_synthetic(spec));
  write_synthetic(b, spec, generate_synthetic(spec));
  spec.seed = 2;
  write_synthetic(c, spec, generate_synthetic(spec));
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  CHECK(files == 5);
  CHECK(slurp(a / "subject1.csv") != slurp(c / "subject1.csv"));
}

TEST_CASE("logged sine frequency is recovered by zero crossings") {
  auto dir = testutil::temp_dir("synth_freq");
  SyntheticSpec spec;
  spec.class_count = 6;  // two sine classes
  write_synthetic(dir, spec, generate_synthetic(spec));
  auto log = nlohmann::json::parse(slurp(dir / "synth_params.json"));
  int checked = 0;
  for (const auto& seg : log["segments"]) {
    if (seg["waveform"] != "sine") continue;
    auto rec = load_csv(dir / (seg["subject"].get<std::string>() + ".csv"));
    const std::size_t first = seg["first_row"], rows = seg["rows"];
    for (int ch = 0; ch < kChannelCount; ++ch) {
      std::vector<double> x;
      for (std::size_t r = first; r < first + rows; ++r) x.push_back(rec.samples(r, ch));
      const double f = seg["freq_hz"];
      CHECK(std::abs(zero_crossing_hz(x, rec.sample_rate_hz) - f) <= 0.05 * f);
      ++checked;
    }
    for (std::size_t r = first; r < first + rows; ++r) CHECK(rec.labels[r] == seg["label"].get<int>());
  }
  CHECK(checked == 2 * 4 * kChannelCount);
}

TEST_CASE("class parameters are distinct") {
  SyntheticSpec spec;
  spec.class_count = 12;
  auto d = generate_synthetic(spec);
  std::set<std::tuple<int, double, double, double>> seen;
  for (const auto& s : d.segments) {
    if (s.subject != "subject1") continue;
    const double p = s.waveform == Waveform::sine ? std::round(s.freq_hz) : 0;
    seen.insert({static_cast<int>(s.waveform), p, std::round(1 / std::max(s.period_s, 1e-9)),
                 std::round(s.sigma / s.amplitude * 1000)});
  }
  CHECK(seen.size() == 12);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec s;
  s.class_count = 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.window_s = 0.011;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.noise = -1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  auto file = testutil::temp_dir("synth_bad") / "blocker";
  std::ofstream(file) << "x";
  CHECK_THROWS_AS(write_synthetic(file / "sub", SyntheticSpec{}, generate_synthetic(SyntheticSpec{})), IoError);
}
