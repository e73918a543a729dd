// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; nothing here may run unless avx2::available() returned true.

#include "fraudfuse/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cstdint>

namespace fraudfuse::kernels::avx2 {

namespace {

// exp(x) for 4 doubles: round-to-nearest power-of-two split with a degree-13
// Taylor polynomial on |r| <= ln(2)/2. Max observed error vs std::exp is a
// couple of ulps, which the sigmoid equivalence tests bound at 1e-12 absolute.
inline __m256d exp_pd(__m256d x) {
  const __m256d max_x = _mm256_set1_pd(708.0);
  const __m256d min_x = _mm256_set1_pd(-708.0);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

  x = _mm256_min_pd(_mm256_max_pd(x, min_x), max_x);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  // Horner over 1/k! coefficients.
  __m256d p = _mm256_set1_pd(1.6059043836821614599e-10);            // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.0876756987868098979e-09));  // 1/12!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.5052108385441718775e-08));  // 1/11!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985890653e-07));  // 1/10!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985892510e-06));  // 1/9!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.4801587301587301566e-05));  // 1/8!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.9841269841269841253e-04));  // 1/7!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.3888888888888889419e-03));  // 1/6!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.3333333333333332177e-03));  // 1/5!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664354e-02));  // 1/4!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666665741e-01));  // 1/3!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // Scale by 2^n through the exponent bits; |n| <= 1022 so no denormals.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i pow2 =
      _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(pow2));
}

inline __m256d sigmoid_pd(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), x));
  return _mm256_div_pd(one, _mm256_add_pd(one, e));
}

}  // namespace

void sigmoid(const double* x, double* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, sigmoid_pd(_mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) {
    alignas(32) double buf[4] = {x[i], 0.0, 0.0, 0.0};
    _mm256_store_pd(buf, sigmoid_pd(_mm256_load_pd(buf)));
    out[i] = buf[0];
  }
}

void logistic_grad_hess(const double* margin, const uint8_t* y, double pos_weight,
                        double* g, double* h, size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d pw_m1 = _mm256_set1_pd(pos_weight - 1.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = sigmoid_pd(_mm256_loadu_pd(margin + i));
    const __m256d yv = _mm256_set_pd(static_cast<double>(y[i + 3]), static_cast<double>(y[i + 2]),
                                     static_cast<double>(y[i + 1]), static_cast<double>(y[i]));
    const __m256d w = _mm256_fmadd_pd(yv, pw_m1, one);  // y ? pos_weight : 1
    _mm256_storeu_pd(g + i, _mm256_mul_pd(w, _mm256_sub_pd(p, yv)));
    _mm256_storeu_pd(h + i, _mm256_mul_pd(_mm256_mul_pd(w, p), _mm256_sub_pd(one, p)));
  }
  if (i < n) scalar::logistic_grad_hess(margin + i, y + i, pos_weight, g + i, h + i, n - i);
}

void accumulate_abs(double* acc, const double* x, size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(acc + i);
    const __m256d v = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(a, v));
  }
  for (; i < n; ++i) acc[i] += __builtin_fabs(x[i]);
}

ThresholdCounts threshold_confusion(const double* scores, const uint8_t* labels,
                                    double threshold, size_t n) {
  const __m256d thr = _mm256_set1_pd(threshold);
  ThresholdCounts c;
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_loadu_pd(scores + i);
    const unsigned gm =
        static_cast<unsigned>(_mm256_movemask_pd(_mm256_cmp_pd(s, thr, _CMP_GE_OQ)));
    const unsigned lm = (labels[i] != 0 ? 1u : 0u) | (labels[i + 1] != 0 ? 2u : 0u) |
                        (labels[i + 2] != 0 ? 4u : 0u) | (labels[i + 3] != 0 ? 8u : 0u);
    c.tp += static_cast<uint64_t>(__builtin_popcount(gm & lm));
    c.fp += static_cast<uint64_t>(__builtin_popcount(gm & ~lm & 0xFu));
    c.fn += static_cast<uint64_t>(__builtin_popcount(~gm & lm & 0xFu));
  }
  for (; i < n; ++i) {
    const bool flagged = scores[i] >= threshold;
    const bool positive = labels[i] != 0;
    c.tp += flagged && positive;
    c.fp += flagged && !positive;
    c.fn += !flagged && positive;
  }
  c.tn = n - c.tp - c.fp - c.fn;
  return c;
}

void hist_accumulate(const uint16_t* bins, const int32_t* rows, size_t n,
                     const double* g, const double* h, HistBin* hist) {
  size_t i = 0;
  alignas(32) double gs[4];
  alignas(32) double hs[4];
  for (; i + 4 <= n; i += 4) {
    const __m128i ridx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(rows + i));
    _mm256_store_pd(gs, _mm256_i32gather_pd(g, ridx, 8));
    _mm256_store_pd(hs, _mm256_i32gather_pd(h, ridx, 8));
    // Scatter stays scalar and in row order, matching the reference exactly.
    for (int k = 0; k < 4; ++k) {
      HistBin& b = hist[bins[rows[i + k]]];
      b.sum_g += gs[k];
      b.sum_h += hs[k];
      b.count += 1;
    }
  }
  if (i < n) scalar::hist_accumulate(bins, rows + i, n - i, g, h, hist);
}

}  // namespace fraudfuse::kernels::avx2

#else  // non-x86 fallback: never selected at runtime, present for the linker

namespace fraudfuse::kernels::avx2 {

void sigmoid(const double* x, double* out, size_t n) { scalar::sigmoid(x, out, n); }

void logistic_grad_hess(const double* margin, const uint8_t* y, double pos_weight,
                        double* g, double* h, size_t n) {
  scalar::logistic_grad_hess(margin, y, pos_weight, g, h, n);
}

void accumulate_abs(double* acc, const double* x, size_t n) {
  scalar::accumulate_abs(acc, x, n);
}

ThresholdCounts threshold_confusion(const double* scores, const uint8_t* labels,
                                    double threshold, size_t n) {
  return scalar::threshold_confusion(scores, labels, threshold, n);
}

void hist_accumulate(const uint16_t* bins, const int32_t* rows, size_t n,
                     const double* g, const double* h, HistBin* hist) {
  scalar::hist_accumulate(bins, rows, n, g, h, hist);
}

}  // namespace fraudfuse::kernels::avx2

#endif
