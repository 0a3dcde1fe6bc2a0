#include "fwbrw/cmj.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fwbrw/parallel.hpp"
#include "fwbrw/stats.hpp"

namespace fwbrw {

double AgeSizeHistogram::total() const {
  double t = overflow;
  for (double w : weights) t += w;
  return t;
}

std::vector<double> AgeSizeHistogram::size_marginal() const {
  std::vector<double> m(j_max + 1, 0.0);
  for (std::size_t a = 0; a < age_bins; ++a) {
    for (std::size_t j = 1; j <= j_max; ++j) m[j] += at(a, j);
  }
  return m;
}

void AgeSizeHistogram::accumulate(const AgeSizeHistogram& other) {
  if (other.weights.size() != weights.size() || other.j_max != j_max) {
    throw std::invalid_argument("AgeSizeHistogram::accumulate: shape mismatch");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += other.weights[i];
  overflow += other.overflow;
}

AgeSizeHistogram AgeSizeHistogram::normalized_copy() const {
  AgeSizeHistogram h = *this;
  const double t = total();
  if (t > 0.0) {
    for (double& w : h.weights) w /= t;
    h.overflow /= t;
  }
  h.normalized = true;
  return h;
}

AgeSizeHistogram make_histogram(double age_bin, double max_age, std::size_t j_max) {
  if (!(age_bin > 0.0) || max_age < 0.0 || j_max < 1) throw std::invalid_argument("make_histogram: invalid shape");
  AgeSizeHistogram h;
  h.age_bin = age_bin;
  h.age_bins = static_cast<std::size_t>(std::floor(max_age / age_bin)) + 1;
  h.j_max = j_max;
  h.weights.assign(h.age_bins * j_max, 0.0);
  return h;
}

AgeSizeHistogram age_size_snapshot(const OccupancyState& state, double age_bin, double max_age, std::size_t j_max,
                                   bool normalize) {
  AgeSizeHistogram h = make_histogram(age_bin, max_age, j_max);
  const auto counts = state.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::uint32_t k = counts[i];
    if (k == 0) continue;
    if (k > j_max) {
      h.overflow += 1.0;
      continue;
    }
    const double age = std::max(0.0, state.t - state.occupied_since(i));
    const auto a = std::min(static_cast<std::size_t>(age / age_bin), h.age_bins - 1);
    h.at(a, k) += 1.0;
  }
  return normalize ? h.normalized_copy() : h;
}

AgeSizeHistogram track_age_size(const OccupancyState& initial, std::span<const EventRecord> log, double t,
                                double age_bin, std::size_t j_max, bool normalize) {
  OccupancyState st = initial;
  for (const EventRecord& ev : log) {
    if (ev.t > t) break;
    replay_event(st, ev);
  }
  st.t = t;
  return age_size_snapshot(st, age_bin, t, j_max, normalize);
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

BirthIntensityCurve estimate_mu(double c, double s, double d, std::span<const double> t_grid, std::size_t replicas,
                                std::uint64_t seed) {
  if (t_grid.empty() || t_grid.front() != 0.0) throw std::invalid_argument("estimate_mu: grid must start at 0");
  if (replicas < 1) throw std::invalid_argument("estimate_mu: replicas must be >= 1");
  const std::size_t n = t_grid.size();
  std::vector<std::vector<double>> paths(replicas, std::vector<double>(n, 0.0));
  parallel_for(replicas, [&](std::size_t r) {
    Rng rng = make_rng(seed, r);
    double k = 1.0, t = 0.0, integral = 0.0;
    std::size_t next = 1;
    auto weight = [&] { return k >= 2.0 ? c * k : 0.0; };
    while (next < n) {
      const double birth = s * k, death = 0.5 * d * k * (k - 1.0), emig = k >= 2.0 ? c * k : 0.0;
      const double total = birth + death + emig;
      const double jump = total > 0.0 ? t + exponential(rng, total) : INFINITY;
      while (next < n && t_grid[next] <= jump) {
        integral += weight() * (t_grid[next] - t);
        t = t_grid[next];
        paths[r][next] = integral;
        ++next;
      }
      if (next >= n) break;
      integral += weight() * (jump - t);
      t = jump;
      const double u = uniform01(rng) * total;
      k += u < birth ? 1.0 : -1.0;
    }
  });
  BirthIntensityCurve out{{t_grid.begin(), t_grid.end()}, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    stats::Accumulator acc;
    for (std::size_t r = 0; r < replicas; ++r) acc.add(paths[r][i]);
    out.mu_hat[i] = acc.mean();
    out.se[i] = replicas > 1 ? acc.se() : 0.0;
  }
  return out;
}

double laplace_transform(const BirthIntensityCurve& mu, double alpha, double tail_rate) {
  double total = 0.0;
  for (std::size_t i = 1; i < mu.t_grid.size(); ++i) {
    const double mid = 0.5 * (mu.t_grid[i - 1] + mu.t_grid[i]);
    total += std::exp(-alpha * mid) * (mu.mu_hat[i] - mu.mu_hat[i - 1]);
  }
  return total + tail_rate * std::exp(-alpha * mu.t_grid.back()) / alpha;
}

MalthusianResult malthusian_alpha(const BirthIntensityCurve& mu, double upper, double tail_fraction) {
  if (mu.t_grid.size() < 3) throw std::invalid_argument("malthusian_alpha: grid too short");
  if (!(upper > 1e-6)) throw std::invalid_argument("malthusian_alpha: upper bracket must exceed 1e-6");
  MalthusianResult res;
  const double T = mu.t_grid.back();
  const double t0 = T * (1.0 - tail_fraction);
  auto it = std::lower_bound(mu.t_grid.begin(), mu.t_grid.end(), t0);
  auto i0 = static_cast<std::size_t>(std::distance(mu.t_grid.begin(), it));
  i0 = std::min(i0, mu.t_grid.size() - 2);
  res.tail_rate = (mu.mu_hat.back() - mu.mu_hat[i0]) / (T - mu.t_grid[i0]);

  auto f = [&](double a) { return laplace_transform(mu, a, res.tail_rate) - 1.0; };
  double lo = 1e-6, hi = upper;
  double flo = f(lo), fhi = f(hi);
  if (!(flo > 0.0 && fhi < 0.0)) {
    res.bracketed = false;
    res.alpha = flo <= 0.0 ? lo : hi;
    res.residual = std::abs(f(res.alpha));
    return res;
  }
  res.bracketed = true;
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  res.alpha = 0.5 * (lo + hi);
  res.residual = std::abs(f(res.alpha));
  return res;
}

GrowthFit growth_rate_fit(std::span<const double> times, const std::vector<std::vector<double>>& k_paths,
                          double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("growth_rate_fit: bad tail");
  GrowthFit fit;
  const std::size_t n = times.size();
  std::vector<const std::vector<double>*> alive;
  for (const auto& p : k_paths) {
    if (p.size() != n) throw std::invalid_argument("growth_rate_fit: path length mismatch");
    if (p.back() > 0.0) alive.push_back(&p);
  }
  fit.used = alive.size();
  if (alive.empty() || n < 2) {
    fit.degenerate = true;
    return fit;
  }
  const double T = times.back();
  const double t0 = times.front() + (1.0 - tail_fraction) * (T - times.front());
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n; ++i) {
    if (times[i] < t0) continue;
    double m = 0.0;
    for (const auto* p : alive) m += (*p)[i];
    m /= static_cast<double>(alive.size());
    if (m <= 0.0) continue;
    x.push_back(times[i]);
    y.push_back(std::log(m));
  }
  if (x.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  const auto lf = stats::linear_fit(x, y);
  fit.alpha_reg = lf.slope;
  fit.r_squared = lf.r_squared;
  for (const auto* p : alive) fit.w_samples.push_back(p->back() * std::exp(-fit.alpha_reg * T));
  return fit;
}

CMJRates cmj_rates(const AgeSizeHistogram& stable, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("cmj_rates: requires c > 0");
  const AgeSizeHistogram h = stable.normalized ? stable : stable.normalized_copy();
  const auto u = h.size_marginal();
  CMJRates r;
  for (std::size_t j = 2; j < u.size(); ++j) r.alpha += c * static_cast<double>(j) * u[j];
  r.gamma = c * (u.size() > 1 ? u[1] : 0.0);
  r.B = (r.alpha + r.gamma) / c;
  return r;
}

CollisionFreeEnsemble simulate_collision_free(double c, double s, double d, const CollisionFreeOptions& options) {
  if (options.times.empty()) throw std::invalid_argument("simulate_collision_free: empty time grid");
  if (!std::is_sorted(options.times.begin(), options.times.end()) ||
      !std::is_sorted(options.snapshot_times.begin(), options.snapshot_times.end())) {
    throw std::invalid_argument("simulate_collision_free: grids must be ascending");
  }
  const ParticleParams params{c, s, d, 0, 0.0};
  params.validate();
  const std::size_t j_max = options.j_max > 0 ? options.j_max
                                               : static_cast<std::size_t>(std::ceil(4.0 * (d > 0.0 ? s / d + 10.0 : 60.0)));

  CollisionFreeEnsemble out;
  out.times = options.times;
  out.occupied.assign(options.replicas, std::vector<double>(options.times.size(), 0.0));
  out.totals.assign(options.replicas, std::vector<double>(options.times.size(), 0.0));
  std::vector<std::vector<AgeSizeHistogram>> per_replica(options.replicas);

  parallel_for(options.replicas, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, r);
    const OccupancyState initial = OccupancyState::seeded(1, 1);
    OccupancyState st = initial;
    std::vector<EventRecord> log;
    std::size_t k = 0;
    // Merge both grids into one sweep of stopping times.
    std::vector<double> stops = options.times;
    stops.insert(stops.end(), options.snapshot_times.begin(), options.snapshot_times.end());
    std::sort(stops.begin(), stops.end());
    for (double stop : stops) {
      if (stop > st.t) run_until(st, params, stop, rng, &log);
      while (k < options.times.size() && options.times[k] <= st.t) {
        out.occupied[r][k] = static_cast<double>(st.occupied());
        out.totals[r][k] = static_cast<double>(st.total());
        ++k;
      }
    }
    for (double ts : options.snapshot_times) {
      per_replica[r].push_back(track_age_size(initial, log, ts, options.age_bin, j_max, false));
    }
  });

  for (std::size_t i = 0; i < options.snapshot_times.size(); ++i) {
    AgeSizeHistogram pooled = make_histogram(options.age_bin, options.snapshot_times[i], j_max);
    for (const auto& rep : per_replica) pooled.accumulate(rep[i]);
    out.snapshots.push_back(std::move(pooled));
  }
  return out;
}

}  // namespace fwbrw
