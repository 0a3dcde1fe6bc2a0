// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "fwbrw/simd/kernels.hpp"

namespace fwbrw::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

struct RateVectors {
  __m256d c, s, mean, half_d, inv_h, inv_h2, zero, one;
};

inline RateVectors make_rate_vectors(const ChainCoeffs& k) {
  const double inv_h = 1.0 / k.h;
  return {_mm256_set1_pd(k.c),      _mm256_set1_pd(k.s),          _mm256_set1_pd(k.mean),
          _mm256_set1_pd(0.5 * k.d), _mm256_set1_pd(inv_h),        _mm256_set1_pd(inv_h * inv_h),
          _mm256_setzero_pd(),       _mm256_set1_pd(1.0)};
}

inline void rates4(__m256d x, const RateVectors& v, __m256d& r, __m256d& l) {
  const __m256d var = _mm256_mul_pd(x, _mm256_sub_pd(v.one, x));
  const __m256d b = _mm256_fmadd_pd(v.s, var, _mm256_mul_pd(v.c, _mm256_sub_pd(v.mean, x)));
  const __m256d diff = _mm256_mul_pd(_mm256_mul_pd(v.half_d, var), v.inv_h2);
  r = _mm256_fmadd_pd(_mm256_max_pd(b, v.zero), v.inv_h, diff);
  l = _mm256_fmadd_pd(_mm256_max_pd(_mm256_sub_pd(v.zero, b), v.zero), v.inv_h, diff);
}

inline void rates1(double xi, const ChainCoeffs& k, double& r, double& l) {
  const double inv_h = 1.0 / k.h;
  const double var = xi * (1.0 - xi);
  const double b = k.c * (k.mean - xi) + k.s * var;
  const double diff = 0.5 * k.d * var * inv_h * inv_h;
  r = std::max(b, 0.0) * inv_h + diff;
  l = std::max(-b, 0.0) * inv_h + diff;
}

}  // namespace

std::size_t fw_euler_step(std::span<double> x, std::span<const double> normals, const EulerCoeffs& k) {
  const std::size_t n = x.size();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d c = _mm256_set1_pd(k.c);
  const __m256d target = _mm256_set1_pd(k.target);
  const __m256d sel = _mm256_set1_pd(k.sel);
  const __m256d gain = _mm256_set1_pd(k.gain);
  const __m256d loss = _mm256_set1_pd(k.loss);
  const __m256d d = _mm256_set1_pd(k.d);
  const __m256d dt = _mm256_set1_pd(k.dt);
  std::size_t clamped = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    const __m256d zv = _mm256_loadu_pd(normals.data() + i);
    const __m256d comp = _mm256_sub_pd(one, xv);
    const __m256d var = _mm256_max_pd(_mm256_mul_pd(xv, comp), zero);
    __m256d drift = _mm256_mul_pd(c, _mm256_sub_pd(target, xv));
    drift = _mm256_fmadd_pd(sel, var, drift);
    drift = _mm256_fmadd_pd(gain, comp, drift);
    drift = _mm256_fnmadd_pd(loss, xv, drift);
    const __m256d sd = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_mul_pd(d, var), dt));
    __m256d next = _mm256_fmadd_pd(drift, dt, xv);
    next = _mm256_fmadd_pd(sd, zv, next);
    const __m256d out = _mm256_or_pd(_mm256_cmp_pd(next, zero, _CMP_LT_OQ), _mm256_cmp_pd(next, one, _CMP_GT_OQ));
    clamped += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(out))));
    next = _mm256_min_pd(_mm256_max_pd(next, zero), one);
    _mm256_storeu_pd(x.data() + i, next);
  }
  for (; i < n; ++i) {
    bool was_clamped = false;
    x[i] = euler_update(x[i], normals[i], k, was_clamped);
    clamped += was_clamped ? 1 : 0;
  }
  return clamped;
}

void mkv_chain_apply(std::span<const double> x, std::span<const double> p_in, std::span<double> p_out,
                     std::span<double> scratch_r, std::span<double> scratch_l, const ChainCoeffs& k) {
  const std::size_t n = x.size();
  const RateVectors v = make_rate_vectors(k);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r, l;
    rates4(_mm256_loadu_pd(x.data() + i), v, r, l);
    _mm256_storeu_pd(scratch_r.data() + i, r);
    _mm256_storeu_pd(scratch_l.data() + i, l);
  }
  for (; i < n; ++i) rates1(x[i], k, scratch_r[i], scratch_l[i]);
  scratch_l[0] = 0.0;
  scratch_r[n - 1] = 0.0;

  auto edge = [&](std::size_t j) {
    const double in_left = j > 0 ? scratch_r[j - 1] * p_in[j - 1] : 0.0;
    const double in_right = j + 1 < n ? scratch_l[j + 1] * p_in[j + 1] : 0.0;
    p_out[j] = p_in[j] + k.dt * (in_left + in_right - (scratch_r[j] + scratch_l[j]) * p_in[j]);
  };
  if (n < 6) {
    for (std::size_t j = 0; j < n; ++j) edge(j);
    return;
  }
  edge(0);
  const __m256d dt = _mm256_set1_pd(k.dt);
  std::size_t j = 1;
  for (; j + 4 <= n - 1; j += 4) {
    const __m256d p = _mm256_loadu_pd(p_in.data() + j);
    const __m256d from_left = _mm256_mul_pd(_mm256_loadu_pd(scratch_r.data() + j - 1), _mm256_loadu_pd(p_in.data() + j - 1));
    const __m256d from_right = _mm256_mul_pd(_mm256_loadu_pd(scratch_l.data() + j + 1), _mm256_loadu_pd(p_in.data() + j + 1));
    const __m256d out_rate = _mm256_add_pd(_mm256_loadu_pd(scratch_r.data() + j), _mm256_loadu_pd(scratch_l.data() + j));
    const __m256d flow = _mm256_fnmadd_pd(out_rate, p, _mm256_add_pd(from_left, from_right));
    _mm256_storeu_pd(p_out.data() + j, _mm256_fmadd_pd(dt, flow, p));
  }
  for (; j < n; ++j) edge(j);
}

double mkv_chain_max_rate(std::span<const double> x, const ChainCoeffs& k) {
  const std::size_t n = x.size();
  const RateVectors v = make_rate_vectors(k);
  __m256d best = _mm256_setzero_pd();
  // Boundary nodes have a one-sided rate; handle them separately.
  std::size_t i = 1;
  for (; i + 4 <= n - 1; i += 4) {
    __m256d r, l;
    rates4(_mm256_loadu_pd(x.data() + i), v, r, l);
    best = _mm256_max_pd(best, _mm256_add_pd(r, l));
  }
  double out = hmax(best);
  for (; i + 1 < n; ++i) {
    double r, l;
    rates1(x[i], k, r, l);
    out = std::max(out, r + l);
  }
  if (n >= 1) {
    double r, l;
    rates1(x[0], k, r, l);
    out = std::max(out, n == 1 ? 0.0 : r);
    if (n > 1) {
      rates1(x[n - 1], k, r, l);
      out = std::max(out, l);
    }
  }
  return out;
}

double sum(std::span<const double> a) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= a.size(); i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a.data() + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a.data() + i + 4));
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < a.size(); ++i) total += a[i];
  return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= a.size(); i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4), acc1);
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

}  // namespace fwbrw::simd::avx2
