#include <algorithm>
#include <cmath>

#include "fwbrw/simd/kernels.hpp"

namespace fwbrw::simd::scalar {

std::size_t fw_euler_step(std::span<double> x, std::span<const double> normals, const EulerCoeffs& k) {
  std::size_t clamped_total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    bool clamped = false;
    x[i] = euler_update(x[i], normals[i], k, clamped);
    clamped_total += clamped ? 1 : 0;
  }
  return clamped_total;
}

namespace {

inline void node_rates(double xi, const ChainCoeffs& k, double inv_h, double inv_h2, double& r, double& l) {
  const double var = xi * (1.0 - xi);
  const double b = k.c * (k.mean - xi) + k.s * var;
  const double diff = 0.5 * k.d * var * inv_h2;
  r = std::max(b, 0.0) * inv_h + diff;
  l = std::max(-b, 0.0) * inv_h + diff;
}

}  // namespace

void mkv_chain_apply(std::span<const double> x, std::span<const double> p_in, std::span<double> p_out,
                     std::span<double> scratch_r, std::span<double> scratch_l, const ChainCoeffs& k) {
  const std::size_t n = x.size();
  const double inv_h = 1.0 / k.h;
  const double inv_h2 = inv_h * inv_h;
  for (std::size_t i = 0; i < n; ++i) {
    node_rates(x[i], k, inv_h, inv_h2, scratch_r[i], scratch_l[i]);
  }
  scratch_l[0] = 0.0;
  scratch_r[n - 1] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double in_left = i > 0 ? scratch_r[i - 1] * p_in[i - 1] : 0.0;
    const double in_right = i + 1 < n ? scratch_l[i + 1] * p_in[i + 1] : 0.0;
    p_out[i] = p_in[i] + k.dt * (in_left + in_right - (scratch_r[i] + scratch_l[i]) * p_in[i]);
  }
}

double mkv_chain_max_rate(std::span<const double> x, const ChainCoeffs& k) {
  const double inv_h = 1.0 / k.h;
  const double inv_h2 = inv_h * inv_h;
  double best = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = 0.0, l = 0.0;
    node_rates(x[i], k, inv_h, inv_h2, r, l);
    if (i == 0) l = 0.0;
    if (i + 1 == x.size()) r = 0.0;
    best = std::max(best, r + l);
  }
  return best;
}

double sum(std::span<const double> a) {
  double total = 0.0;
  for (double v : a) total += v;
  return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

}  // namespace fwbrw::simd::scalar
