#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "spikehar/kernels.hpp"

using namespace spikehar::kernels;

namespace {

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> t{&scalar_table()};
  if (avx2_table()) t.push_back(avx2_table());
  return t;
}

}  // namespace

TEST_CASE("runtime dispatch picks an available table") {
  const auto& a = active();
  CHECK((a.name == "scalar" || a.name == "avx2"));
  MESSAGE("active kernels: " << a.name);
}

TEST_CASE("lif_step_one decay arithmetic") {
  LifConstants k{4096 - 1024, 4096 - 128, 1 << 22, 0};
  std::int32_t u = 4096, v = 0, r = 0;
  std::uint8_t s = 0;
  std::vector<std::int32_t> seen;
  for (int i = 0; i < 5; ++i) {
    seen.push_back(u);
    // No input: u decays by exactly 3/4 with floor.
    REQUIRE(lif_step_one(u, v, r, 0, s, k));
  }
  CHECK(seen == std::vector<std::int32_t>{4096, 3072, 2304, 1728, 1296});

  // Floor, not truncation, for negative values.
  u = -5;
  v = 0;
  lif_step_one(u, v, r, 0, s, k);
  CHECK(u == -4);  // floor(-3.75)
}

TEST_CASE("lif kernels agree with the scalar reference") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 70;
    LifConstants k;
    k.keep_u = static_cast<std::int32_t>(rng() % 4097);
    k.keep_v = static_cast<std::int32_t>(rng() % 4097);
    k.threshold = 1 + static_cast<std::int32_t>(rng() % 5000);
    k.refractory_steps = static_cast<std::int32_t>(rng() % 4);
    std::uniform_int_distribution<std::int32_t> state(kStateMin, kStateMax);
    std::uniform_int_distribution<std::int32_t> small(-3000, 3000);
    std::uniform_int_distribution<std::int32_t> input(-(1 << 24), 1 << 24);
    std::vector<std::int32_t> u(n), v(n), r(n), in(n);
    const bool wide = trial % 3 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = wide ? state(rng) : small(rng);
      v[i] = wide ? state(rng) : small(rng);
      r[i] = static_cast<std::int32_t>(rng() % 3);
      in[i] = wide ? input(rng) : small(rng);
    }
    // Reference: per-neuron scalar step.
    auto ru = u, rv = v, rr = r;
    std::vector<std::uint8_t> rs(n);
    bool ref_ok = true;
    for (std::size_t i = 0; i < n; ++i) ref_ok &= lif_step_one(ru[i], rv[i], rr[i], in[i], rs[i], k);

    for (const auto* t : tables()) {
      auto tu = u, tv = v, tr = r;
      std::vector<std::uint8_t> ts(n);
      const bool ok = t->lif_update(tu.data(), tv.data(), tr.data(), in.data(), ts.data(), n, k);
      CHECK(ok == ref_ok);
      if (ref_ok) {
        CHECK(tu == ru);
        CHECK(tv == rv);
        CHECK(tr == rr);
        CHECK(ts == rs);
      }
    }
  }
}

TEST_CASE("delta spike kernels agree with the scalar reference") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> d(0.0, 1e-3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 100;
    std::vector<double> s(n + 1);
    for (auto& x : s) x = d(rng);
    if (trial % 5 == 0)  // exact-threshold differences
      for (std::size_t i = 1; i < s.size(); ++i) s[i] = s[i - 1] + ((i % 2) ? 0.5 : -0.5);
    const double eps = trial % 5 == 0 ? 0.5 : std::abs(d(rng));
    std::vector<std::uint8_t> p0(n), n0(n);
    scalar_table().delta_spikes(s.data(), n, eps, p0.data(), n0.data());
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(p0[t] == (s[t + 1] - s[t] > eps));
      CHECK(n0[t] == (s[t + 1] - s[t] < -eps));
    }
    for (const auto* t : tables()) {
      std::vector<std::uint8_t> p1(n), n1(n);
      t->delta_spikes(s.data(), n, eps, p1.data(), n1.data());
      CHECK(p1 == p0);
      CHECK(n1 == n0);
    }
  }
}

TEST_CASE("dot and accumulate kernels agree with the scalar reference") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng() % 300;
    std::vector<std::uint8_t> x(n);
    std::vector<std::int8_t> w(n);
    std::vector<std::int32_t> acc(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng() % 2;
      w[i] = static_cast<std::int8_t>(static_cast<int>(rng() % 256) - 128);
      acc[i] = static_cast<std::int32_t>(rng() % 100000) - 50000;
    }
    std::int32_t expect = 0;
    for (std::size_t i = 0; i < n; ++i) expect += x[i] * w[i];
    for (const auto* t : tables()) {
      CHECK(t->dot_spikes(x.data(), w.data(), n) == expect);
      auto a = acc;
      t->accumulate(a.data(), w.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == acc[i] + w[i]);
    }
  }
}
