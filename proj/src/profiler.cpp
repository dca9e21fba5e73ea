#include "spikehar/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "spikehar/error.hpp"

namespace spikehar {

OpCounters& OpCounters::operator+=(const OpCounters& o) {
  sops += o.sops;
  neuron_updates += o.neuron_updates;
  dense_updates += o.dense_updates;
  if (spikes_per_layer.size() < o.spikes_per_layer.size()) spikes_per_layer.resize(o.spikes_per_layer.size(), 0);
  for (std::size_t i = 0; i < o.spikes_per_layer.size(); ++i) spikes_per_layer[i] += o.spikes_per_layer[i];
  timesteps += o.timesteps;
  return *this;
}

OpCounters count_ops(const NetworkModel& m, const RunResult& run) {
  OpCounters c;
  c.timesteps = run.timesteps;
  c.neuron_updates = run.neuron_updates;
  c.dense_updates = static_cast<std::uint64_t>(m.neuron_count()) * static_cast<std::uint64_t>(run.timesteps);
  c.spikes_per_layer.assign(m.layers.size() + 1, 0);

  // Raster r feeds layer r (input raster feeds layer 0); the output raster
  // has no outgoing synapses.
  auto walk = [&](const Raster& raster, std::size_t idx) {
    for (const auto& step : raster) {
      c.spikes_per_layer[idx] += step.size();
      if (idx >= m.layers.size()) continue;
      for (auto n : step) c.sops += static_cast<std::uint64_t>(m.layers[idx].fanout(n));
    }
  };
  walk(run.input_raster, 0);
  for (std::size_t l = 0; l < run.layer_rasters.size(); ++l) walk(run.layer_rasters[l], l + 1);
  return c;
}

void EnergyModel::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string("energy model: ") + name + " must be >= 0");
  };
  check(e_sop, "e_sop");
  check(e_update, "e_update");
  check(p_static, "p_static");
  check(timestep_s, "timestep_s");
}

EnergyModel EnergyModel::from_config(const Config& c) {
  EnergyModel m;
  m.e_sop = c.get_double("e_sop", 0.0);
  m.e_update = c.get_double("e_update", 0.0);
  m.p_static = c.get_double("p_static", 0.0);
  m.timestep_s = c.get_double("timestep_s", 0.0);
  m.validate();
  return m;
}

EnergyModel EnergyModel::load(const std::filesystem::path& path) { return from_config(Config::load(path)); }

EnergyEstimate estimate_energy(const OpCounters& c, const EnergyModel& m) {
  m.validate();
  EnergyEstimate e;
  e.dynamic_j = static_cast<double>(c.sops) * m.e_sop + static_cast<double>(c.neuron_updates) * m.e_update;
  e.static_j = m.p_static * static_cast<double>(c.timesteps) * m.timestep_s;
  e.total_j = e.dynamic_j + e.static_j;
  return e;
}

double edp(double energy_j, double latency_s) {
  if (!(energy_j >= 0.0) || !(latency_s >= 0.0)) throw RangeError("edp: energy and latency must be >= 0");
  return energy_j * latency_s;
}

double modeled_latency(std::int64_t timesteps, double timestep_s, bool injection_stall) {
  if (timesteps < 0 || timestep_s < 0) throw RangeError("latency: negative input");
  return static_cast<double>(timesteps) * (timestep_s + (injection_stall ? kInjectionStallS : 0.0));
}

std::vector<ReportRow> baseline_rows() {
  return {
      {"GAP8 (RISC-V)", "ANN", 0.881, 3.2e-3, 0.41e-3},
      {"STM32 (Cortex-M7)", "ANN", 0.893, 20.88e-3, 8.07e-3},
  };
}

std::vector<ReportRow> ProfileReport::rows() const {
  std::vector<ReportRow> all{measured};
  all.insert(all.end(), baselines.begin(), baselines.end());
  return sort_rows(std::move(all));
}

std::vector<ReportRow> sort_rows(std::vector<ReportRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.edp_js() != b.edp_js()) return a.edp_js() < b.edp_js();
    if (a.hardware != b.hardware) return a.hardware < b.hardware;
    return a.model < b.model;
  });
  return rows;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

std::vector<std::string> cells(const ReportRow& r) {
  return {r.hardware,
          r.model,
          fmt("%.4f", r.accuracy),
          fmt("%.6g", r.latency_s * 1e3),
          fmt("%.6g", r.energy_j * 1e3),
          fmt("%.6g", r.edp_js() * 1e6)};
}

const std::vector<std::string> kHeader{"hardware", "model", "accuracy", "latency_ms", "energy_mj", "edp_ujs"};

}  // namespace

std::string render_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kHeader.size(); ++i) out << (i ? "," : "") << kHeader[i];
  out << '\n';
  for (const auto& r : rows) {
    auto c = cells(r);
    for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "," : "") << csv_field(c[i]);
    out << '\n';
  }
  return out.str();
}

std::string render_table(const std::vector<ReportRow>& rows) {
  std::vector<std::vector<std::string>> grid{kHeader};
  for (const auto& r : rows) grid.push_back(cells(r));
  std::vector<std::size_t> width(kHeader.size(), 0);
  for (const auto& row : grid)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::ostringstream out;
  for (const auto& row : grid) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      // Text columns left-aligned, numbers right-aligned.
      const std::string pad(width[i] - row[i].size(), ' ');
      out << (i ? "  " : "") << (i < 2 ? row[i] + pad : pad + row[i]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace spikehar
