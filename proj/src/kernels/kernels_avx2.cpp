// Compiled with -mavx2; only entered after a runtime CPU check.
#include "spikehar/kernels.hpp"

#if defined(SPIKEHAR_HAVE_AVX2)

#include <immintrin.h>

namespace spikehar::kernels {

namespace {

// floor(x * keep / 4096) for 24-bit x without 64-bit lanes:
// x = hi*4096 + lo with lo in [0, 4095], so the result is hi*keep + (lo*keep >> 12).
inline __m256i decay8(__m256i x, __m256i keep) {
  const __m256i hi = _mm256_srai_epi32(x, 12);
  const __m256i lo = _mm256_and_si256(x, _mm256_set1_epi32(4095));
  return _mm256_add_epi32(_mm256_mullo_epi32(hi, keep),
                          _mm256_srli_epi32(_mm256_mullo_epi32(lo, keep), 12));
}

inline __m256i out_of_range8(__m256i x) {
  return _mm256_or_si256(_mm256_cmpgt_epi32(x, _mm256_set1_epi32(kStateMax)),
                         _mm256_cmpgt_epi32(_mm256_set1_epi32(kStateMin), x));
}

bool lif_update_avx2(std::int32_t* u, std::int32_t* v, std::int32_t* refractory,
                     const std::int32_t* input, std::uint8_t* spikes, std::size_t n,
                     const LifConstants& k) {
  const __m256i keep_u = _mm256_set1_epi32(k.keep_u);
  const __m256i keep_v = _mm256_set1_epi32(k.keep_v);
  const __m256i thr_m1 = _mm256_set1_epi32(k.threshold - 1);
  const __m256i refr_reload = _mm256_set1_epi32(k.refractory_steps);
  const __m256i zero = _mm256_setzero_si256();
  __m256i bad = zero;

  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    auto* up = reinterpret_cast<__m256i*>(u + i);
    auto* vp = reinterpret_cast<__m256i*>(v + i);
    auto* rp = reinterpret_cast<__m256i*>(refractory + i);
    const __m256i u0 = _mm256_loadu_si256(up);
    const __m256i v0 = _mm256_loadu_si256(vp);
    const __m256i r0 = _mm256_loadu_si256(rp);
    const __m256i in = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(input + i));

    const __m256i un = _mm256_add_epi32(decay8(u0, keep_u), in);
    const __m256i refr = _mm256_cmpgt_epi32(r0, zero);
    const __m256i vcand = _mm256_add_epi32(decay8(v0, keep_v), un);
    const __m256i vn = _mm256_blendv_epi8(vcand, v0, refr);
    const __m256i fire = _mm256_andnot_si256(refr, _mm256_cmpgt_epi32(vn, thr_m1));

    bad = _mm256_or_si256(bad, _mm256_or_si256(out_of_range8(un), out_of_range8(vn)));

    _mm256_storeu_si256(up, un);
    _mm256_storeu_si256(vp, _mm256_andnot_si256(fire, vn));
    // refr lanes are all-ones (-1) where refractory, so adding decrements them.
    const __m256i r1 = _mm256_add_epi32(r0, refr);
    _mm256_storeu_si256(rp, _mm256_blendv_epi8(r1, refr_reload, fire));

    const int bits = _mm256_movemask_ps(_mm256_castsi256_ps(fire));
    for (int j = 0; j < 8; ++j) spikes[i + j] = static_cast<std::uint8_t>((bits >> j) & 1);
  }
  bool ok = _mm256_testz_si256(bad, bad) != 0;
  for (; i < n; ++i) ok &= lif_step_one(u[i], v[i], refractory[i], input[i], spikes[i], k);
  return ok;
}

void delta_spikes_avx2(const double* s, std::size_t n, double eps, std::uint8_t* pos,
                       std::uint8_t* neg) {
  const __m256d hi = _mm256_set1_pd(eps);
  const __m256d lo = _mm256_set1_pd(-eps);
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(s + t + 1), _mm256_loadu_pd(s + t));
    const int p = _mm256_movemask_pd(_mm256_cmp_pd(d, hi, _CMP_GT_OQ));
    const int q = _mm256_movemask_pd(_mm256_cmp_pd(d, lo, _CMP_LT_OQ));
    for (int j = 0; j < 4; ++j) {
      pos[t + j] = static_cast<std::uint8_t>((p >> j) & 1);
      neg[t + j] = static_cast<std::uint8_t>((q >> j) & 1);
    }
  }
  for (; t < n; ++t) {
    const double d = s[t + 1] - s[t];
    pos[t] = d > eps;
    neg[t] = d < -eps;
  }
}

std::int32_t dot_spikes_avx2(const std::uint8_t* x, const std::int8_t* w, std::size_t n) {
  const __m256i ones16 = _mm256_set1_epi16(1);
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i xv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + i));
    const __m256i wv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(w + i));
    // x in {0,1}: pairwise sums stay within int16, no saturation.
    acc = _mm256_add_epi32(acc, _mm256_madd_epi16(_mm256_maddubs_epi16(xv, wv), ones16));
  }
  __m128i s = _mm_add_epi32(_mm256_castsi256_si128(acc), _mm256_extracti128_si256(acc, 1));
  s = _mm_hadd_epi32(s, s);
  s = _mm_hadd_epi32(s, s);
  std::int32_t total = _mm_cvtsi128_si32(s);
  for (; i < n; ++i) total += x[i] ? w[i] : 0;
  return total;
}

void accumulate_avx2(std::int32_t* acc, const std::int8_t* w, std::size_t n) {
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m128i wb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(w + i));
    auto* a0 = reinterpret_cast<__m256i*>(acc + i);
    auto* a1 = reinterpret_cast<__m256i*>(acc + i + 8);
    _mm256_storeu_si256(a0, _mm256_add_epi32(_mm256_loadu_si256(a0), _mm256_cvtepi8_epi32(wb)));
    _mm256_storeu_si256(
        a1, _mm256_add_epi32(_mm256_loadu_si256(a1), _mm256_cvtepi8_epi32(_mm_srli_si128(wb, 8))));
  }
  for (; i < n; ++i) acc[i] += w[i];
}

}  // namespace

const KernelTable* avx2_table_impl() {
  static const KernelTable table{"avx2", &lif_update_avx2, &delta_spikes_avx2, &dot_spikes_avx2,
                                 &accumulate_avx2};
  return &table;
}

}  // namespace spikehar::kernels

#endif  // SPIKEHAR_HAVE_AVX2
