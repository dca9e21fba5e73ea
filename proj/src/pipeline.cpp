#include "spikehar/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "spikehar/parallel.hpp"
#include "spikehar/snn_engine.hpp"

namespace spikehar {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string> kKeys{
    "data_dir",       "out_dir",       "rate_hz",       "seed",          "jobs",           "resample_hz",     "interp",
    "window_s",       "stride_s",      "label_rule",    "bank_scheme",    "imu_base",        "cap_base",
    "threshold_count", "decay_u",      "decay_v",       "v_threshold",    "refractory_steps", "timestep_ms",
    "arch",           "epochs",        "lr",            "delay_lr",       "batch_size",      "train_delays",
    "stop_at_accuracy", "init_gain",   "surrogate",     "alpha",          "loss_true",       "loss_false",
    "weighted_classes", "e_sop",       "e_update",      "p_static",       "timestep_s",      "injection_stall",
    "hardware_label", "baselines"};

}  // namespace

const std::vector<std::string>& pipeline_config_keys() { return kKeys; }

PipelineConfig PipelineConfig::from_config(const Config& c) {
  for (const auto& [k, v] : c.values())
    if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end()) throw ConfigError("unknown config key '" + k + "'");
  PipelineConfig p;
  p.data_dir = c.get_or("data_dir", "");
  p.out_dir = c.get_or("out_dir", "out");
  if (c.has("rate_hz")) p.rate_hz = c.get_double("rate_hz", 0.0);
  p.resample.target_rate_hz = c.get_double("resample_hz", p.resample.target_rate_hz);
  if (auto v = c.get("interp")) p.resample.method = parse_interp_method(*v);
  p.window.window_s = c.get_double("window_s", p.window.window_s);
  p.window.stride_s = c.get_double("stride_s", p.window.window_s);
  if (auto v = c.get("label_rule")) p.window.label_rule = parse_label_rule(*v);
  if (auto v = c.get("bank_scheme")) p.bank_scheme = parse_bank_scheme(*v);
  p.imu_base = c.get_double("imu_base", p.imu_base);
  p.cap_base = c.get_double("cap_base", p.cap_base);
  p.threshold_count = static_cast<int>(c.get_int("threshold_count", p.threshold_count));

  std::map<std::string, std::string> lif_keys;
  for (const char* k : {"decay_u", "decay_v", "v_threshold", "refractory_steps", "timestep_ms"})
    if (auto v = c.get(k)) lif_keys[k] = *v;
  p.lif = lif_from_config(lif_keys);

  p.train.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<std::int64_t>(p.train.seed)));
  p.train.jobs = static_cast<int>(c.get_int("jobs", p.train.jobs));
  p.train.epochs = static_cast<int>(c.get_int("epochs", p.train.epochs));
  p.train.learning_rate = c.get_double("lr", p.train.learning_rate);
  p.train.delay_learning_rate = c.get_double("delay_lr", p.train.delay_learning_rate);
  p.train.batch_size = static_cast<int>(c.get_int("batch_size", p.train.batch_size));
  p.train.train_delays = c.get_bool("train_delays", p.train.train_delays);
  p.train.stop_at_accuracy = c.get_double("stop_at_accuracy", p.train.stop_at_accuracy);
  p.train.init_gain = c.get_double("init_gain", p.train.init_gain);
  p.arch = c.get_or("arch", "");
  if (auto v = c.get("surrogate")) p.surrogate.shape = parse_surrogate_shape(*v);
  p.surrogate.alpha = c.get_double("alpha", p.surrogate.alpha);
  p.loss_true = c.get_double("loss_true", p.loss_true);
  p.loss_false = c.get_double("loss_false", p.loss_false);
  p.weighted_classes = c.get_bool("weighted_classes", p.weighted_classes);

  Config energy;
  for (const char* k : {"e_sop", "e_update", "p_static", "timestep_s"})
    if (auto v = c.get(k)) energy.set(k, *v);
  p.energy = EnergyModel::from_config(energy);
  p.injection_stall = c.get_bool("injection_stall", p.injection_stall);
  p.hardware_label = c.get_or("hardware_label", p.hardware_label);
  p.include_baselines = c.get_bool("baselines", p.include_baselines);

  p.train.validate();
  p.surrogate.validate();
  build_bank(p.imu_base, p.bank_scheme, p.threshold_count);
  build_bank(p.cap_base, p.bank_scheme, p.threshold_count);
  return p;
}

BankSet PipelineConfig::banks() const {
  return {{Modality::imu, build_bank(imu_base, bank_scheme, threshold_count)},
          {Modality::capacitance, build_bank(cap_base, bank_scheme, threshold_count)}};
}

std::vector<IngestedWindow> ingest_dir(const std::filesystem::path& dir, const ResampleSpec& resample_spec,
                                       const WindowSpec& window, std::optional<double> rate_hz) {
  if (dir.empty() || !std::filesystem::is_directory(dir)) throw IoError("data directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InsufficientDataError("no .csv recordings in " + dir.string());
  std::vector<IngestedWindow> out;
  for (const auto& f : files) {
    RawRecording rec;
    try {
      rec = resample(load_csv(f, default_channel_names(), rate_hz), resample_spec);
    } catch (const Error& e) {
      throw StageError("ingest", f.filename().string() + ": " + e.what());
    }
    for (auto& w : slice_windows(rec, window)) out.push_back({std::move(w), rec.subject_id});
  }
  if (out.empty()) throw InsufficientDataError("recordings in " + dir.string() + " are shorter than one window");
  return out;
}

std::vector<Sample> encode_windows(const std::vector<IngestedWindow>& windows, const BankSet& banks, int jobs) {
  std::vector<Sample> out(windows.size());
  parallel_for(windows.size(), jobs, [&](std::size_t i) {
    out[i] = {encode_window(windows[i].window.samples, banks), windows[i].window.label, windows[i].subject};
  });
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto partial = path;
  partial += ".partial";
  {
    std::ofstream f(partial, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + partial.string());
    f << bytes;
    if (!f) throw IoError("write failed: " + partial.string());
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) throw IoError("cannot rename " + partial.string() + ": " + ec.message());
}

void write_spike_dir(const std::filesystem::path& dir, const std::vector<Sample>& samples) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ostringstream index;
  index << "file,subject,label\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.spk", i);
    std::ostringstream bytes;
    write_spk(bytes, samples[i].spikes);
    write_file_atomic(dir / name, bytes.str());
    index << name << ',' << samples[i].subject << ',' << samples[i].label << '\n';
  }
  write_file_atomic(dir / "index.csv", index.str());
}

std::vector<Sample> read_spike_dir(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.csv");
  if (!in) throw IoError("missing " + (dir / "index.csv").string());
  std::string line;
  std::getline(in, line);
  if (line != "file,subject,label") throw FormatError("unexpected index.csv header: " + line);
  std::vector<Sample> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.rfind(',');
    if (a == std::string::npos || a == b) throw ParseError(row, "expected file,subject,label");
    Sample s;
    s.subject = line.substr(a + 1, b - a - 1);
    try {
      s.label = std::stoi(line.substr(b + 1));
    } catch (const std::exception&) {
      throw ParseError(row, "bad label '" + line.substr(b + 1) + "'");
    }
    s.spikes = read_spk(dir / line.substr(0, a));
    out.push_back(std::move(s));
  }
  if (out.empty()) throw InsufficientDataError("no spike files listed in " + (dir / "index.csv").string());
  return out;
}

std::string default_arch(int class_count) { return "64D" + std::to_string(class_count) + "D"; }

int class_count_of(const std::vector<Sample>& samples) {
  int k = 0;
  for (const auto& s : samples) k = std::max(k, s.label + 1);
  return std::max(k, 2);
}

LossSpec loss_for(const PipelineConfig& cfg, const std::vector<Sample>& train_set, int class_count) {
  const std::int64_t T = train_set.empty() ? 0 : train_set.front().spikes.timesteps();
  LossSpec spec = LossSpec::defaults_for(T, class_count);
  if (cfg.loss_true >= 0) spec.target_true = cfg.loss_true;
  if (cfg.loss_false >= 0) spec.target_false = cfg.loss_false;
  if (cfg.weighted_classes) {
    std::vector<int> labels;
    for (const auto& s : train_set) labels.push_back(s.label);
    spec.class_weights = class_weights(labels, class_count).weights;
  }
  return spec;
}

InferenceSummary infer_all(const NetworkModel& m, const std::vector<Sample>& samples, int jobs) {
  InferenceSummary s;
  s.predicted.assign(samples.size(), 0);
  std::vector<OpCounters> per(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    auto r = run_event_driven(m, samples[i].spikes);
    s.predicted[i] = classify(r.counts);
    per[i] = count_ops(m, r);
  });
  std::size_t hit = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    hit += s.predicted[i] == samples[i].label;
    s.counters += per[i];
  }
  s.accuracy = samples.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(samples.size());
  return s;
}

ProfileReport build_report(const PipelineConfig& cfg, const InferenceSummary& inf, double accuracy,
                           std::size_t samples) {
  ProfileReport rep;
  rep.counters = inf.counters;
  EnergyModel em = cfg.energy;
  if (em.timestep_s == 0.0) em.timestep_s = cfg.lif.timestep_ms * 1e-3;
  const EnergyEstimate total = estimate_energy(inf.counters, em);
  const double n = static_cast<double>(std::max<std::size_t>(samples, 1));
  // Per-inference figures: one report row describes one classification.
  rep.energy = {total.dynamic_j / n, total.static_j / n, total.total_j / n};
  const std::int64_t steps = samples ? inf.counters.timesteps / static_cast<std::int64_t>(samples) : 0;
  rep.measured = {cfg.hardware_label, "SNN", accuracy, modeled_latency(steps, em.timestep_s, cfg.injection_stall),
                  rep.energy.total_j};
  if (cfg.include_baselines) rep.baselines = baseline_rows();
  return rep;
}

std::string loss_curve_csv(const TrainResult& r) {
  std::ostringstream out;
  out << "epoch,loss,train_accuracy\n";
  for (std::size_t e = 0; e < r.loss_curve.size(); ++e)
    out << e + 1 << ',' << fmt_double(r.loss_curve[e]) << ',' << fmt_double(r.train_accuracy[e]) << '\n';
  return out.str();
}

std::string folds_csv(const CrossValidation& cv) {
  std::ostringstream out;
  out << "subject,test_samples,accuracy\n";
  for (const auto& f : cv.folds) out << f.subject << ',' << f.test_samples << ',' << fmt_double(f.accuracy) << '\n';
  out << "mean,," << fmt_double(cv.mean_accuracy) << '\n';
  return out.str();
}

std::string predictions_csv(const std::vector<Sample>& samples, const std::vector<int>& predicted) {
  std::ostringstream out;
  out << "index,subject,label,predicted\n";
  for (std::size_t i = 0; i < samples.size(); ++i)
    out << i << ',' << samples[i].subject << ',' << samples[i].label << ',' << predicted[i] << '\n';
  return out.str();
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  PipelineResult res;
  const auto out = cfg.out_dir;
  stage("setup", [&] {
    std::filesystem::create_directories(out);
    return 0;
  });

  auto windows = stage("ingest", [&] { return ingest_dir(cfg.data_dir, cfg.resample, cfg.window, cfg.rate_hz); });
  res.windows = windows.size();

  auto samples = stage("encode", [&] {
    auto s = encode_windows(windows, cfg.banks(), cfg.train.jobs);
    write_spike_dir(out / "spikes", s);
    return s;
  });
  windows.clear();

  const int K = class_count_of(samples);
  TrainConfig tc = cfg.train;
  tc.arch = cfg.arch.empty() ? default_arch(K) : cfg.arch;

  stage("train", [&] {
    // Folds each get their own class weights from their training subjects.
    res.cv.folds = louo_folds(samples);
    TrainConfig fold_cfg = tc;
    fold_cfg.jobs = 1;
    parallel_for(res.cv.folds.size(), tc.jobs, [&](std::size_t f) {
      auto& fold = res.cv.folds[f];
      std::vector<Sample> train_set;
      for (auto i : fold.train_indices) train_set.push_back(samples[i]);
      auto r = train(train_set, fold_cfg, cfg.surrogate, loss_for(cfg, train_set, K), cfg.lif);
      fold.accuracy = evaluate_accuracy(quantize_model(r.model), samples, fold.test_indices, 1);
    });
    double sum = 0;
    for (const auto& f : res.cv.folds) sum += f.accuracy;
    res.cv.mean_accuracy = sum / static_cast<double>(res.cv.folds.size());
    write_file_atomic(out / "folds.csv", folds_csv(res.cv));

    res.final_train = train(samples, tc, cfg.surrogate, loss_for(cfg, samples, K), cfg.lif);
    res.model = quantize_model(res.final_train.model);
    std::ostringstream model_bytes;
    write_snm(model_bytes, res.model);
    write_file_atomic(out / "model.snm", model_bytes.str());
    write_file_atomic(out / "loss.csv", loss_curve_csv(res.final_train));
    return 0;
  });

  auto inf = stage("infer", [&] {
    auto s = infer_all(res.model, samples, cfg.train.jobs);
    write_file_atomic(out / "predictions.csv", predictions_csv(samples, s.predicted));
    return s;
  });

  stage("profile", [&] {
    res.report = build_report(cfg, inf, res.cv.mean_accuracy, samples.size());
    const auto rows = res.report.rows();
    write_file_atomic(out / "report.csv", render_csv(rows));
    write_file_atomic(out / "report.txt", render_table(rows));
    return 0;
  });
  return res;
}

}  // namespace spikehar
