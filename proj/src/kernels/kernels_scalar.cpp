#include "spikehar/kernels.hpp"

namespace spikehar::kernels {

namespace {

bool in_state_range(std::int64_t x) { return x >= kStateMin && x <= kStateMax; }

bool lif_update_scalar(std::int32_t* u, std::int32_t* v, std::int32_t* refractory,
                       const std::int32_t* input, std::uint8_t* spikes, std::size_t n,
                       const LifConstants& k) {
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) ok &= lif_step_one(u[i], v[i], refractory[i], input[i], spikes[i], k);
  return ok;
}

void delta_spikes_scalar(const double* s, std::size_t n, double eps, std::uint8_t* pos,
                         std::uint8_t* neg) {
  for (std::size_t t = 0; t < n; ++t) {
    const double d = s[t + 1] - s[t];
    pos[t] = d > eps;
    neg[t] = d < -eps;
  }
}

std::int32_t dot_spikes_scalar(const std::uint8_t* x, const std::int8_t* w, std::size_t n) {
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] ? w[i] : 0;
  return acc;
}

void accumulate_scalar(std::int32_t* acc, const std::int8_t* w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += w[i];
}

}  // namespace

bool lif_step_one(std::int32_t& u, std::int32_t& v, std::int32_t& refractory, std::int32_t input,
                  std::uint8_t& spike, const LifConstants& k) {
  const std::int64_t un = floor_div(std::int64_t{u} * k.keep_u, kDecayOne) + input;
  std::int64_t vn = v;
  bool fire = false;
  if (refractory > 0) {
    --refractory;
  } else {
    vn = floor_div(std::int64_t{v} * k.keep_v, kDecayOne) + un;
    fire = vn >= k.threshold;
  }
  const bool ok = in_state_range(un) && in_state_range(vn);
  u = static_cast<std::int32_t>(un);
  v = fire ? 0 : static_cast<std::int32_t>(vn);
  if (fire) refractory = k.refractory_steps;
  spike = fire;
  return ok;
}

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &lif_update_scalar, &delta_spikes_scalar,
                                 &dot_spikes_scalar, &accumulate_scalar};
  return table;
}

}  // namespace spikehar::kernels
