#include "fwbrw/duality.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fwbrw/parallel.hpp"
#include "fwbrw/stats.hpp"

namespace fwbrw {

namespace {

double death_rate(std::size_t n, double d) { return 0.5 * d * static_cast<double>(n) * static_cast<double>(n - 1); }

// Sample D_t of the pure-death chain from D_0 = k.
std::size_t sample_death_chain(std::size_t k, double d, double t, Rng& rng) {
  double clock = 0.0;
  while (k > 1) {
    clock += exponential(rng, death_rate(k, d));
    if (clock > t) break;
    --k;
  }
  return k;
}

}  // namespace

DualityReport make_report(double lhs_mean, double lhs_se, double rhs_mean, double rhs_se, double threshold) {
  DualityReport r{lhs_mean, lhs_se, rhs_mean, rhs_se, 0.0, false};
  const double diff = lhs_mean - rhs_mean;
  if (lhs_se > 0.0 || rhs_se > 0.0) {
    r.z_score = stats::z_score(lhs_mean, lhs_se, rhs_mean, rhs_se);
  } else {
    r.z_score = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
  }
  r.pass = std::abs(r.z_score) < threshold;
  return r;
}

std::vector<double> death_chain_law(std::size_t k, double d, double t) {
  if (k < 1) throw std::invalid_argument("death_chain_law: k must be >= 1");
  if (d < 0.0 || t < 0.0) throw std::invalid_argument("death_chain_law: d and t must be non-negative");
  std::vector<double> p(k + 1, 0.0);
  if (k == 1 || d == 0.0 || t == 0.0) {
    p[k] = 1.0;
    return p;
  }
  // Hypoexponential: P(D_t = j) = prod_{i=j+1}^k l_i * sum_{i=j}^k e^{-l_i t} / prod_{l != i} (l_l - l_i).
  double below = 0.0;
  for (std::size_t j = 2; j <= k; ++j) {
    double coeff = 1.0;
    for (std::size_t i = j + 1; i <= k; ++i) coeff *= death_rate(i, d);
    double sum = 0.0;
    for (std::size_t i = j; i <= k; ++i) {
      double denom = 1.0;
      for (std::size_t l = j; l <= k; ++l) {
        if (l != i) denom *= death_rate(l, d) - death_rate(i, d);
      }
      sum += std::exp(-death_rate(i, d) * t) / denom;
    }
    p[j] = std::max(0.0, coeff * sum);
    below += p[j];
  }
  p[1] = std::max(0.0, 1.0 - below);
  return p;
}

DualExpectation death_chain_moment(double x0, double d, std::size_t k, double t, std::size_t replicas, Rng& rng) {
  if (k < 1) throw std::invalid_argument("death_chain_moment: k must be >= 1");
  if (k <= 3) {
    const auto p = death_chain_law(k, d, t);
    double m = 0.0;
    for (std::size_t j = 1; j <= k; ++j) m += p[j] * std::pow(x0, static_cast<double>(j));
    return {m, 0.0};
  }
  if (replicas < 2) throw std::invalid_argument("death_chain_moment: need at least 2 replicas");
  stats::Accumulator acc;
  for (std::size_t r = 0; r < replicas; ++r) {
    acc.add(std::pow(x0, static_cast<double>(sample_death_chain(k, d, t, rng))));
  }
  return {acc.mean(), acc.se()};
}

std::vector<DualityReport> check_moment_duality(double x0, double d, std::span<const std::size_t> ks, double t,
                                                const MomentDualityOptions& options) {
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw std::invalid_argument("check_moment_duality: x0 must lie in [0,1]");
  if (!(d > 0.0)) throw std::invalid_argument("check_moment_duality: requires d > 0");
  if (t < 0.0) throw std::invalid_argument("check_moment_duality: t must be non-negative");
  if (options.replicas < 2) throw std::invalid_argument("check_moment_duality: need at least 2 replicas");
  for (std::size_t k : ks) {
    if (k < 1) throw std::invalid_argument("check_moment_duality: k must be >= 1");
  }
  const std::size_t steps = t > 0.0 ? static_cast<std::size_t>(std::ceil(t / options.dt - 1e-9)) : 0;
  const double h = steps > 0 ? t / static_cast<double>(steps) : 0.0;
  const DiffusionParams params{0.0, 0.0, d, 0.0};

  std::vector<double> finals(options.replicas);
  parallel_for(options.replicas, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, r);
    double x = x0;
    for (std::size_t i = 0; i < steps; ++i) x = step_fw_scheme(x, params, h, options.scheme, rng);
    finals[r] = x;
  });

  Rng dual_rng = make_rng(options.seed, options.replicas);
  std::vector<DualityReport> out;
  for (std::size_t k : ks) {
    stats::Accumulator lhs;
    for (double x : finals) lhs.add(std::pow(x, static_cast<double>(k)));
    const DualExpectation rhs = death_chain_moment(x0, d, k, t, options.replicas, dual_rng);
    out.push_back(make_report(lhs.mean(), lhs.se(), rhs.mean, rhs.se, options.threshold));
  }
  return out;
}

DualityReport check_moment_duality(double x0, double d, std::size_t k, double t, const MomentDualityOptions& options) {
  const std::size_t ks[] = {k};
  return check_moment_duality(x0, d, ks, t, options).front();
}

OccupationPath dual_occupation(const ParticleParams& params, double t, Rng& rng) {
  params.validate();
  if (params.unbounded()) throw std::invalid_argument("dual_occupation: requires a finite model");
  if (t < 0.0) throw std::invalid_argument("dual_occupation: t must be non-negative");
  OccupancyState state = OccupancyState::seeded(params.N, 1);
  std::vector<EventRecord> log;
  run_until(state, params, t, rng, &log);

  OccupationPath path;
  path.times.push_back(0.0);
  path.counts.push_back(1.0);
  double last = 0.0, count = 1.0;
  for (const EventRecord& ev : log) {
    if (ev.type != EventType::birth && ev.type != EventType::death) continue;
    path.integral += count * (ev.t - last);
    last = ev.t;
    count += ev.type == EventType::birth ? 1.0 : -1.0;
    path.times.push_back(ev.t);
    path.counts.push_back(count);
  }
  path.integral += count * (t - last);
  return path;
}

DualityReport check_spatial_duality(const SystemParams& params, double t, const SpatialDualityOptions& options) {
  params.validate();
  if (t < 0.0) throw std::invalid_argument("check_spatial_duality: t must be non-negative");
  if (options.replicas < 2) throw std::invalid_argument("check_spatial_duality: need at least 2 replicas");
  const std::size_t steps = t > 0.0 ? static_cast<std::size_t>(std::ceil(t / options.dt - 1e-9)) : 0;
  const double h = steps > 0 ? t / static_cast<double>(steps) : 0.0;

  std::vector<double> lhs(options.replicas), rhs(options.replicas);
  parallel_for(options.replicas, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, 2 * r);
    FrequencyState state = FrequencyState::all_type1(params.N);
    for (std::size_t i = 0; i < steps; ++i) state = step_system(std::move(state), params, h, rng);
    lhs[r] = empirical_mean(state, TypeIndex::one);
  });
  const ParticleParams dual{params.c, params.s, params.d, params.N, 0.0};
  const double rate = params.mutation_rate();
  parallel_for(options.replicas, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, 2 * r + 1);
    rhs[r] = std::exp(-rate * dual_occupation(dual, t, rng).integral);
  });
  const auto a = stats::summarize(lhs);
  const auto b = stats::summarize(rhs);
  return make_report(a.mean, a.se, b.mean, b.se, options.threshold);
}

TimescaleResult single_site_timescale(double s, double d, std::span<const double> L_grid, std::size_t replicas,
                                      std::uint64_t seed, double m) {
  if (!(s > 0.0) || d < 0.0 || !(m > 0.0)) throw std::invalid_argument("single_site_timescale: need s, m > 0, d >= 0");
  if (L_grid.size() < 2) throw std::invalid_argument("single_site_timescale: need at least two L values");
  if (replicas < 1) throw std::invalid_argument("single_site_timescale: replicas must be >= 1");
  TimescaleResult res;
  res.log_scale = d == 0.0;
  res.L.assign(L_grid.begin(), L_grid.end());
  for (std::size_t g = 0; g < L_grid.size(); ++g) {
    const double L = L_grid[g];
    if (!(L > 0.0)) throw std::invalid_argument("single_site_timescale: L must be positive");
    const double target = L / m;  // int Pi reaching L/m means hazard 1
    std::vector<double> hits(replicas);
    parallel_for(replicas, [&](std::size_t r) {
      Rng rng = make_rng(seed, g * replicas + r);
      double k = 1.0, t = 0.0, integral = 0.0;
      for (;;) {
        const double birth = s * k, death = 0.5 * d * k * (k - 1.0);
        const double dt = exponential(rng, birth + death);
        if (integral + k * dt >= target) {
          hits[r] = t + (target - integral) / k;
          return;
        }
        integral += k * dt;
        t += dt;
        k += uniform01(rng) * (birth + death) < birth ? 1.0 : -1.0;
      }
    });
    res.medians.push_back(stats::median(hits));
  }
  std::vector<double> x;
  for (double L : res.L) x.push_back(res.log_scale ? std::log(L) : L);
  const auto fit = stats::linear_fit(x, res.medians);
  res.slope = fit.slope;
  res.intercept = fit.intercept;
  res.r_squared = fit.r_squared;
  return res;
}

}  // namespace fwbrw
