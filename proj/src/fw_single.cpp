#include "fwbrw/fw_single.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fwbrw/simd/kernels.hpp"

namespace fwbrw {

void DiffusionParams::validate() const {
  for (double v : {c, s, d, m_bar}) {
    if (!std::isfinite(v)) throw std::invalid_argument("DiffusionParams: non-finite parameter");
  }
  if (c < 0.0 || s < 0.0 || d < 0.0) throw std::invalid_argument("DiffusionParams: rates must be non-negative");
  if (m_bar < 0.0 || m_bar > 1.0) throw std::invalid_argument("DiffusionParams: m_bar must lie in [0,1]");
}

double step_fw(double state, const DiffusionParams& params, double dt, double noise, StepDiagnostics* diag) {
  if (!std::isfinite(state) || !std::isfinite(dt) || !std::isfinite(noise)) {
    throw std::invalid_argument("step_fw: non-finite input");
  }
  if (dt <= 0.0) throw std::invalid_argument("step_fw: dt must be positive");
  if (state < 0.0 || state > 1.0) throw std::invalid_argument("step_fw: state outside [0,1]");
  const simd::EulerCoeffs k{params.c, params.m_bar, params.s, 0.0, 0.0, params.d, dt};
  bool clamped = false;
  const double next = simd::euler_update(state, noise, k, clamped);
  if (diag) {
    ++diag->steps;
    diag->clamped += clamped ? 1 : 0;
  }
  return next;
}

namespace {

// expm1(x)/x, continuous at 0.
double expm1_ratio(double x) {
  if (std::abs(x) < 1e-8) return 1.0 + 0.5 * x;
  return std::expm1(x) / x;
}

// PTRS transformed rejection (Hormann 1993); no per-mean setup tables.
std::int64_t poisson_ptrs(double mu, Rng& rng) {
  const double slam = std::sqrt(mu);
  const double loglam = std::log(mu);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    const double v = uniform01(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <= -mu + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

std::int64_t poisson_draw(double mu, Rng& rng) {
  if (mu >= 10.0) return poisson_ptrs(mu, rng);
  // Inversion by sequential search.
  const double u = uniform01(rng);
  double p = std::exp(-mu), cdf = p;
  std::int64_t k = 0;
  while (u > cdf && p > 0.0) {
    ++k;
    p *= mu / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

}  // namespace

double cir_step(double y, double a, double b, double sigma2, double h, Rng& rng) {
  const double growth = std::exp(b * h);
  const double phi = expm1_ratio(b * h);
  if (sigma2 <= 0.0) return y * growth + a * h * phi;
  const double g = 0.25 * sigma2 * h * phi;
  const double poisson_mean = y * growth / (2.0 * g);
  double shape = 2.0 * a / sigma2;
  if (poisson_mean > 0.0) {
    shape += static_cast<double>(poisson_draw(poisson_mean, rng));
  }
  if (shape <= 0.0) return 0.0;
  using Gamma = std::gamma_distribution<double>;
  thread_local Gamma gamma;
  return 2.0 * g * gamma(rng, Gamma::param_type(shape, 1.0));
}

double step_fw_cir(double y, const FwDrift& drift, double dt, Rng& rng, StepDiagnostics* diag) {
  if (!std::isfinite(y) || !std::isfinite(dt)) throw std::invalid_argument("step_fw_cir: non-finite input");
  if (dt <= 0.0) throw std::invalid_argument("step_fw_cir: dt must be positive");
  double next;
  if (y <= 0.5) {
    const double other = 1.0 - y;
    next = cir_step(y, drift.c * drift.target + drift.mu, -drift.c + drift.s * other - drift.mu,
                    drift.d * other, dt, rng);
  } else {
    const double z = 1.0 - y;
    next = 1.0 - cir_step(z, drift.c * (1.0 - drift.target), -drift.c - drift.s * y - drift.mu, drift.d * y,
                          dt, rng);
  }
  bool clamped = false;
  if (next < 0.0) {
    next = 0.0;
    clamped = true;
  } else if (next > 1.0) {
    next = 1.0;
    clamped = true;
  }
  if (diag) {
    ++diag->steps;
    diag->clamped += clamped ? 1 : 0;
  }
  return next;
}

double step_fw_scheme(double y, const DiffusionParams& params, double dt, StepScheme scheme, Rng& rng,
                      StepDiagnostics* diag) {
  if (scheme == StepScheme::euler_clamp) return step_fw(y, params, dt, standard_normal(rng), diag);
  return step_fw_cir(y, FwDrift{params.c, params.m_bar, params.s, 0.0, params.d}, dt, rng, diag);
}

namespace {

// Integrand of S after substituting y = 1 - exp(-v), which removes the
// (1-y)^(-2c/d) blow-up near y = 1.
struct ScaleIntegrand {
  double two_s_over_d;
  double exponent;  // 2c/d - 1

  double operator()(double v) const { return std::exp(-two_s_over_d * (-std::expm1(-v)) + exponent * v); }
};

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double scale_function(const DiffusionParams& params, double x) {
  params.validate();
  if (!std::isfinite(x) || x < 0.0) throw std::domain_error("scale_function: x must lie in [0,1)");
  if (x >= 1.0) throw std::domain_error("scale_function: x >= 1 (integrand singular at 1)");
  if (params.d <= 0.0) throw std::domain_error("scale_function: requires d > 0");
  if (x == 0.0) return 0.0;
  const ScaleIntegrand f{2.0 * params.s / params.d, 2.0 * params.c / params.d - 1.0};
  const double upper = -std::log1p(-x);
  constexpr int panels = 16;
  const double width = upper / panels;
  // Coarse estimate fixes the absolute tolerance for the adaptive pass.
  double coarse = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = p * width, b = (p + 1) * width;
    coarse += width / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  }
  const double tol = 1e-14 * std::abs(coarse) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = p * width, b = (p + 1) * width;
    const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    total += adaptive_simpson(f, a, b, fa, fm, fb, width / 6.0 * (fa + 4.0 * fm + fb), tol, 48);
  }
  return total;
}

double hitting_probability(const DiffusionParams& params, double eps, double eta) {
  if (!(eps > 0.0 && eps < eta && eta < 1.0)) {
    throw std::invalid_argument("hitting_probability: need 0 < eps < eta < 1");
  }
  return scale_function(params, eps) / scale_function(params, eta);
}

ScaleTable make_scale_table(const DiffusionParams& params, std::vector<double> grid) {
  if (grid.empty() || grid.front() != 0.0) throw std::invalid_argument("make_scale_table: grid must start at 0");
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw std::invalid_argument("make_scale_table: grid must be strictly ascending");
  }
  if (grid.back() >= 1.0) throw std::domain_error("make_scale_table: grid must stay below 1");
  ScaleTable table{std::move(grid), {}, params};
  table.values.reserve(table.grid.size());
  for (double x : table.grid) table.values.push_back(scale_function(params, x));
  return table;
}

ExcursionPath sample_excursion(const DiffusionParams& params, double eps, double dt, Rng& rng,
                               const ExcursionOptions& options) {
  params.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("sample_excursion: eps must lie in (0,1)");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("sample_excursion: dt must be positive");
  DiffusionParams p = params;
  p.m_bar = 0.0;

  ExcursionPath path;
  path.sup = eps;
  if (options.record_samples) path.samples.push_back({0.0, eps});
  double w = eps;
  for (std::size_t step = 1; step <= options.max_steps; ++step) {
    const double prev = w;
    if (options.scheme == StepScheme::euler_clamp) {
      // Termination is decided on the unclamped Euler value.
      const double var = std::max(w * (1.0 - w), 0.0);
      const double raw = w + (-p.c * w + p.s * var) * dt + std::sqrt(p.d * var * dt) * standard_normal(rng);
      w = std::min(raw, 1.0);
      if (raw <= 0.0) w = 0.0;
    } else {
      w = step_fw_cir(w, FwDrift{p.c, 0.0, p.s, 0.0, p.d}, dt, rng);
    }
    const double t = static_cast<double>(step) * dt;
    if (options.record_samples) path.samples.push_back({t, w});
    path.sup = std::max(path.sup, w);
    if (w <= 0.0) {
      path.lifetime = t;
      return path;
    }
    if (options.stop_level && w < *options.stop_level && w > 0.0) {
      // Crossing between grid times, from the Brownian bridge with the
      // diffusion coefficient frozen at the level.
      const double b = *options.stop_level;
      const double var = p.d * b * (1.0 - b) * dt;
      if (var > 0.0 && uniform01(rng) < std::exp(-2.0 * (b - prev) * (b - w) / var)) w = b;
    }
    if (options.stop_level && w >= *options.stop_level) {
      path.reached_stop_level = true;
      return path;
    }
  }
  path.capped = true;
  return path;
}

}  // namespace fwbrw
