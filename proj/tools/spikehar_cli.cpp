// Command-line entry point: ingest, encode, train, infer, profile, synth,
// pipeline and the optional RecGym adapter.
#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "spikehar/config.hpp"
#include "spikehar/pipeline.hpp"
#include "spikehar/snn_engine.hpp"
#include "spikehar/synth.hpp"

using namespace spikehar;
namespace fs = std::filesystem;

namespace {

// Flags that map one-to-one onto config keys. Values are kept as text and
// validated by PipelineConfig::from_config.
struct FlagMap {
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> bound;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    bound.emplace_back(app->add_option(flag, values[key], help), key);
  }
  void add_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& value,
                const std::string& help) {
    auto* opt = app->add_flag(flag, help);
    values[key] = value;
    bound.emplace_back(opt, key);
  }
  void apply(Config& c) const {
    for (const auto& [opt, key] : bound)
      if (opt->count() > 0) c.set(key, values.at(key));
  }
};

struct Globals {
  std::string config;
  FlagMap flags;
};

PipelineConfig resolve(const Globals& g) {
  Config c = g.config.empty() ? Config{} : Config::load(g.config);
  for (const auto& k : pipeline_config_keys())
    if (const char* v = std::getenv(env_name(k).c_str())) c.set(k, v);
  g.flags.apply(c);
  return PipelineConfig::from_config(c);
}

void add_ingest_flags(CLI::App* sub, FlagMap& f) {
  f.add(sub, "--data", "data_dir", "Directory of CSV recordings");
  f.add(sub, "--rate-hz", "rate_hz", "Source rate for CSVs without a rate comment");
  f.add(sub, "--window-s", "window_s", "Window length in seconds (default 2.0)");
  f.add(sub, "--stride-s", "stride_s", "Window stride in seconds (default: window length)");
  f.add(sub, "--resample", "interp", "cubic_spline or linear");
  f.add(sub, "--label-rule", "label_rule", "majority or center_sample");
  f.add(sub, "--resample-hz", "resample_hz", "Target rate (default 1000)");
}

void add_encode_flags(CLI::App* sub, FlagMap& f) {
  f.add(sub, "--bank", "bank_scheme", "geometric or arithmetic");
  f.add(sub, "--imu-base", "imu_base", "Smallest IMU threshold");
  f.add(sub, "--cap-base", "cap_base", "Smallest capacitance threshold");
  f.add(sub, "--count", "threshold_count", "Thresholds per signal");
}

void add_train_flags(CLI::App* sub, FlagMap& f) {
  f.add(sub, "--epochs", "epochs", "Training epochs");
  f.add(sub, "--lr", "lr", "Weight learning rate");
  f.add(sub, "--delay-lr", "delay_lr", "Delay learning rate (default: --lr)");
  f.add(sub, "--batch-size", "batch_size", "Samples per update");
  f.add(sub, "--arch", "arch", "Layer string, e.g. 64D3D or 32C64C128D12D");
  f.add(sub, "--loss-true", "loss_true", "Target spike count for the true class");
  f.add(sub, "--loss-false", "loss_false", "Target spike count for other classes");
  f.add(sub, "--surrogate", "surrogate", "exp or rect");
  f.add(sub, "--alpha", "alpha", "Surrogate width in threshold units");
  f.add(sub, "--stop-at", "stop_at_accuracy", "Stop when epoch train accuracy reaches this");
  f.add(sub, "--v-threshold", "v_threshold", "Neuron threshold");
  f.add(sub, "--decay-u", "decay_u", "Current decay (of 4096)");
  f.add(sub, "--decay-v", "decay_v", "Voltage decay (of 4096)");
}

void add_profile_flags(CLI::App* sub, FlagMap& f) {
  f.add_flag(sub, "--stall", "injection_stall", "true", "Charge a 1 ms spike-injection stall per timestep");
  f.add_flag(sub, "--no-baselines", "baselines", "false", "Omit the published edge baseline rows");
  f.add(sub, "--hardware", "hardware_label", "Label of the measured row");
}

std::vector<Sample> load_samples(const PipelineConfig& cfg, const fs::path& data) {
  if (fs::exists(data / "index.csv")) return read_spike_dir(data);
  auto windows = ingest_dir(data, cfg.resample, cfg.window, cfg.rate_hz);
  return encode_windows(windows, cfg.banks(), cfg.train.jobs);
}

std::vector<Sample> load_spikes_arg(const PipelineConfig& cfg, const fs::path& p) {
  if (fs::is_directory(p)) return load_samples(cfg, p);
  Sample s;
  s.spikes = read_spk(p);
  s.label = -1;  // unlabeled
  return {s};
}

template <typename Fn>
void run_stage(const char* name, Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void print_report(const ProfileReport& rep, std::size_t samples, double wall_s) {
  std::cout << render_table(rep.rows());
  const double n = static_cast<double>(std::max<std::size_t>(samples, 1));
  std::printf("per inference: %.1f sops, %.1f neuron updates (dense equivalent %.1f)\n",
              static_cast<double>(rep.counters.sops) / n, static_cast<double>(rep.counters.neuron_updates) / n,
              static_cast<double>(rep.counters.dense_updates) / n);
  std::printf("latency above is modeled (timesteps x timestep); harness wall-clock %.3f s\n", wall_s);
}

// RecGym: one CSV with per-row subject, position, session, 6 IMU columns,
// one capacitance column and a workout name, sampled at 20 Hz.
void recgym_convert(const fs::path& file, const std::string& position, const fs::path& out) {
  std::ifstream in(file);
  if (!in) throw IoError("RecGym file not found: " + file.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw SchemaError(name);
  };
  const std::size_t c_subj = col("Subject"), c_pos = col("Position"), c_sess = col("Session"), c_work = col("Workout");
  const std::vector<std::size_t> c_sig{col("A_x"), col("A_y"), col("A_z"), col("G_x"), col("G_y"), col("G_z"),
                                       col("C_1")};
  struct Rows {
    std::vector<std::array<double, kChannelCount>> x;
    std::vector<std::string> workout;
  };
  std::map<std::string, Rows> groups;
  std::set<std::string> workouts;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < header.size()) throw ParseError(row, "short row");
    if (cells[c_pos] != position) continue;
    auto& g = groups["s" + cells[c_subj] + "_" + cells[c_sess]];
    std::array<double, kChannelCount> x{};
    for (int k = 0; k < kChannelCount; ++k) {
      try {
        x[k] = std::stod(cells[c_sig[k]]);
      } catch (const std::exception&) {
        throw ParseError(row, "bad number '" + cells[c_sig[k]] + "'");
      }
    }
    g.x.push_back(x);
    g.workout.push_back(cells[c_work]);
    workouts.insert(cells[c_work]);
  }
  if (groups.empty()) throw InsufficientDataError("no rows for position '" + position + "'");
  if (workouts.size() > 12) throw RangeError("more than 12 workout classes");
  std::map<std::string, int> label_of;
  for (const auto& w : workouts) label_of.emplace(w, static_cast<int>(label_of.size()));
  fs::create_directories(out);
  for (const auto& [key, g] : groups) {
    RawRecording rec;
    rec.subject_id = key.substr(0, key.find('_'));
    rec.session_id = key;
    rec.sample_rate_hz = 20.0;
    rec.channels = default_channel_names();
    rec.samples = SampleMatrix(g.x.size(), kChannelCount);
    for (std::size_t r = 0; r < g.x.size(); ++r) {
      for (int k = 0; k < kChannelCount; ++k) rec.samples(r, k) = g.x[r][k];
      rec.labels.push_back(label_of[g.workout[r]]);
    }
    write_csv(out / (key + ".csv"), rec);
  }
  std::ostringstream labels;
  labels << "label,workout\n";
  for (const auto& [w, l] : label_of) labels << l << ',' << w << '\n';
  write_file_atomic(out / "labels.csv", labels.str());
  std::cout << "recgym: " << groups.size() << " recordings, " << workouts.size() << " classes -> " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikehar: spike-encoded activity recognition with a quantized LIF network"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  auto& f = g.flags;
  app.add_option("--config", g.config, "key=value config file")->check(CLI::ExistingFile);
  f.add(&app, "--seed", "seed", "Random seed");
  f.add(&app, "--out", "out_dir", "Output directory");
  f.add(&app, "--jobs", "jobs", "Worker threads");

  auto* ingest = app.add_subcommand("ingest", "Load, resample and window CSV recordings");
  add_ingest_flags(ingest, f);

  auto* encode = app.add_subcommand("encode", "Encode windows into SPK1 spike files");
  add_ingest_flags(encode, f);
  add_encode_flags(encode, f);

  auto* trainc = app.add_subcommand("train", "Train on a spike directory (or CSV directory)");
  add_ingest_flags(trainc, f);
  add_encode_flags(trainc, f);
  add_train_flags(trainc, f);
  bool with_cv = false;
  trainc->add_flag("--cv", with_cv, "Also run leave-one-user-out cross-validation");

  auto* infer = app.add_subcommand("infer", "Classify spike files with a trained model");
  std::string model_path, spikes_path;
  infer->add_option("--model", model_path, "SNM1 model")->required()->check(CLI::ExistingFile);
  infer->add_option("--spikes", spikes_path, "Spike directory, CSV directory or single .spk file")->required();
  add_ingest_flags(infer, f);

  auto* profile = app.add_subcommand("profile", "Count operations and estimate energy, latency and EDP");
  std::string energy_path;
  double given_accuracy = -1.0;
  profile->add_option("--model", model_path, "SNM1 model")->required()->check(CLI::ExistingFile);
  profile->add_option("--spikes", spikes_path, "Spike directory or single .spk file")->required();
  profile->add_option("--energy-config", energy_path, "key=value energy model")->check(CLI::ExistingFile);
  profile->add_option("--accuracy", given_accuracy, "Accuracy to report (default: measured on labeled spikes)");
  add_profile_flags(profile, f);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-subject dataset");
  SyntheticSpec sspec;
  synth->add_option("--classes", sspec.class_count, "Class count (default 3)");
  synth->add_option("--subjects", sspec.subjects, "Subjects (default 4)");
  synth->add_option("--windows", sspec.windows_per_class, "Windows per class per subject (default 20)");
  synth->add_option("--window-s", sspec.window_s, "Window length in seconds (default 2.0)");
  synth->add_option("--rate-hz", sspec.rate_hz, "Source sample rate (default 50)");
  synth->add_option("--amplitude", sspec.amplitude, "Waveform amplitude");
  synth->add_option("--noise", sspec.noise, "White noise std");

  auto* pipeline = app.add_subcommand("pipeline", "ingest -> encode -> train (LOUO) -> infer -> profile");
  add_ingest_flags(pipeline, f);
  add_encode_flags(pipeline, f);
  add_train_flags(pipeline, f);
  add_profile_flags(pipeline, f);
  pipeline->add_option("--energy-config", energy_path, "key=value energy model")->check(CLI::ExistingFile);

  auto* recgym = app.add_subcommand("recgym", "Convert a local RecGym CSV into per-session recordings");
  std::string recgym_file, position = "wrist";
  recgym->add_option("--file", recgym_file, "RecGym.csv")->required();
  recgym->add_option("--position", position, "Sensor position to keep (default wrist)");

  CLI11_PARSE(app, argc, argv);

  std::string current = app.get_subcommands().front()->get_name();
  try {
    PipelineConfig cfg;
    run_stage("config", [&] {
      cfg = resolve(g);
      if (!energy_path.empty()) {
        const auto e = EnergyModel::load(energy_path);
        cfg.energy = e;
      }
    });
    const fs::path out = cfg.out_dir;

    if (ingest->parsed()) {
      run_stage("ingest", [&] {
        auto windows = ingest_dir(cfg.data_dir, cfg.resample, cfg.window, cfg.rate_hz);
        std::ostringstream csv;
        csv << "index,subject,label,start_row,rows\n";
        for (std::size_t i = 0; i < windows.size(); ++i)
          csv << i << ',' << windows[i].subject << ',' << windows[i].window.label << ','
              << windows[i].window.start_row << ',' << windows[i].window.samples.rows << '\n';
        fs::create_directories(out);
        write_file_atomic(out / "windows.csv", csv.str());
        std::cout << "ingest: " << windows.size() << " windows -> " << (out / "windows.csv") << "\n";
      });
    } else if (encode->parsed()) {
      std::vector<IngestedWindow> windows;
      run_stage("ingest", [&] { windows = ingest_dir(cfg.data_dir, cfg.resample, cfg.window, cfg.rate_hz); });
      run_stage("encode", [&] {
        auto samples = encode_windows(windows, cfg.banks(), cfg.train.jobs);
        write_spike_dir(out / "spikes", samples);
        std::uint64_t total = 0;
        for (const auto& s : samples) total += spike_stats(s.spikes).total;
        std::cout << "encode: " << samples.size() << " windows, " << total << " spikes -> " << (out / "spikes")
                  << "\n";
      });
    } else if (trainc->parsed()) {
      std::vector<Sample> samples;
      run_stage("ingest", [&] { samples = load_samples(cfg, cfg.data_dir); });
      run_stage("train", [&] {
        const int K = class_count_of(samples);
        TrainConfig tc = cfg.train;
        tc.arch = cfg.arch.empty() ? default_arch(K) : cfg.arch;
        fs::create_directories(out);
        if (with_cv) {
          auto cv = cross_validate(samples, tc, cfg.surrogate, loss_for(cfg, samples, K), cfg.lif);
          write_file_atomic(out / "folds.csv", folds_csv(cv));
          std::cout << folds_csv(cv);
        }
        auto r = train(samples, tc, cfg.surrogate, loss_for(cfg, samples, K), cfg.lif, nullptr,
                       [](int e, double l, double a) { std::fprintf(stderr, "epoch %d loss %.6g acc %.4f\n", e, l, a); });
        std::ostringstream bytes;
        write_snm(bytes, quantize_model(r.model));
        write_file_atomic(out / "model.snm", bytes.str());
        write_file_atomic(out / "loss.csv", loss_curve_csv(r));
        std::cout << "train: " << r.loss_curve.size() << " epochs -> " << (out / "model.snm") << "\n";
      });
    } else if (infer->parsed()) {
      NetworkModel m;
      std::vector<Sample> samples;
      run_stage("ingest", [&] {
        m = read_snm(model_path);
        samples = load_spikes_arg(cfg, spikes_path);
      });
      run_stage("infer", [&] {
        auto s = infer_all(m, samples, cfg.train.jobs);
        fs::create_directories(out);
        write_file_atomic(out / "predictions.csv", predictions_csv(samples, s.predicted));
        if (samples.size() == 1) std::cout << "class " << s.predicted[0] << "\n";
        if (samples.front().label >= 0) std::printf("accuracy %.4f over %zu windows\n", s.accuracy, samples.size());
      });
    } else if (profile->parsed()) {
      NetworkModel m;
      std::vector<Sample> samples;
      run_stage("ingest", [&] {
        m = read_snm(model_path);
        samples = load_spikes_arg(cfg, spikes_path);
      });
      run_stage("profile", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        auto s = infer_all(m, samples, cfg.train.jobs);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool labeled = samples.front().label >= 0;
        const double acc = given_accuracy >= 0 ? given_accuracy : (labeled ? s.accuracy : 0.0);
        auto rep = build_report(cfg, s, acc, samples.size());
        fs::create_directories(out);
        write_file_atomic(out / "report.csv", render_csv(rep.rows()));
        write_file_atomic(out / "report.txt", render_table(rep.rows()));
        print_report(rep, samples.size(), wall);
      });
    } else if (synth->parsed()) {
      run_stage("synth", [&] {
        sspec.seed = cfg.train.seed;
        auto d = generate_synthetic(sspec);
        write_synthetic(out, sspec, d);
        std::cout << "synth: " << d.recordings.size() << " recordings -> " << out << "\n";
      });
    } else if (pipeline->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      auto r = run_pipeline(cfg);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << folds_csv(r.cv);
      print_report(r.report, r.windows, wall);
    } else if (recgym->parsed()) {
      run_stage("recgym", [&] { recgym_convert(recgym_file, position, out); });
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s: %s\n", current.c_str(), e.what());
    return 1;
  }
  return 0;
}
