#include "fwbrw/particles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fwbrw/parallel.hpp"

namespace fwbrw {

void ParticleParams::validate() const {
  for (double v : {c, s, d, iota}) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("ParticleParams: rates must be finite and >= 0");
  }
  if (!unbounded() && iota != 0.0) throw std::invalid_argument("ParticleParams: iota applies to the limit model only");
}

std::string_view event_name(EventType type) {
  switch (type) {
    case EventType::none: return "none";
    case EventType::birth: return "birth";
    case EventType::death: return "death";
    case EventType::migrate: return "migrate";
    case EventType::emigrate: return "emigrate";
    case EventType::immigrate: return "immigrate";
  }
  return "unknown";
}

namespace {
constexpr double kNever = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);
}  // namespace

OccupancyState::OccupancyState(std::size_t sites) {
  for (std::size_t i = 0; i < sites; ++i) add_site();
}

OccupancyState OccupancyState::seeded(std::size_t sites, std::uint32_t k) {
  if (sites < 1) throw std::invalid_argument("OccupancyState::seeded: need at least one site");
  OccupancyState st(sites);
  for (std::uint32_t i = 0; i < k; ++i) st.add_particle(0);
  return st;
}

std::size_t OccupancyState::sites_with(std::uint32_t k) const {
  if (k == 0) return empty_.size();
  return k < buckets_.size() ? buckets_[k].size() : 0;
}

std::size_t OccupancyState::add_site() {
  const std::size_t site = counts_.size();
  counts_.push_back(0);
  since_.push_back(kNever);
  slot_.push_back(kNoSlot);
  empty_.insert(site);
  return site;
}

std::size_t OccupancyState::lowest_empty_site() {
  if (empty_.empty()) return add_site();
  return *empty_.begin();
}

void OccupancyState::bucket_insert(std::size_t site, std::uint32_t k) {
  if (k >= buckets_.size()) {
    buckets_.resize(k + 1);
    nonempty_slot_.resize(k + 1, kNoSlot);
  }
  auto& b = buckets_[k];
  if (b.empty()) {
    nonempty_slot_[k] = nonempty_.size();
    nonempty_.push_back(k);
  }
  slot_[site] = b.size();
  b.push_back(site);
}

void OccupancyState::bucket_erase(std::size_t site, std::uint32_t k) {
  auto& b = buckets_[k];
  const std::size_t pos = slot_[site];
  b[pos] = b.back();
  slot_[b[pos]] = pos;
  b.pop_back();
  slot_[site] = kNoSlot;
  if (b.empty()) {
    const std::size_t np = nonempty_slot_[k];
    nonempty_[np] = nonempty_.back();
    nonempty_slot_[nonempty_[np]] = np;
    nonempty_.pop_back();
    nonempty_slot_[k] = kNoSlot;
  }
}

void OccupancyState::add_particle(std::size_t site) {
  const std::uint32_t k = counts_.at(site);
  if (k == 0) {
    empty_.erase(site);
    since_[site] = t;
  } else {
    bucket_erase(site, k);
  }
  counts_[site] = k + 1;
  bucket_insert(site, k + 1);
  ++total_;
  pairs_ += k;
}

void OccupancyState::remove_particle(std::size_t site) {
  const std::uint32_t k = counts_.at(site);
  if (k == 0) throw std::logic_error("OccupancyState: removing from an empty site");
  bucket_erase(site, k);
  counts_[site] = k - 1;
  if (k == 1) {
    empty_.insert(site);
    since_[site] = kNever;
  } else {
    bucket_insert(site, k - 1);
  }
  --total_;
  pairs_ -= k - 1;
}

template <class W>
std::size_t OccupancyState::pick(Rng& rng, W weight) const {
  double total = 0.0;
  for (std::uint32_t k : nonempty_) total += weight(k) * static_cast<double>(buckets_[k].size());
  if (!(total > 0.0)) throw std::logic_error("OccupancyState: no site carries positive weight");
  double u = uniform01(rng) * total;
  std::uint32_t chosen = 0;
  for (std::uint32_t k : nonempty_) {
    const double w = weight(k) * static_cast<double>(buckets_[k].size());
    if (w <= 0.0) continue;
    chosen = k;
    if (u < w) break;
    u -= w;
  }
  const auto& b = buckets_[chosen];
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(b.size())),
                                         b.size() - 1);
  return b[idx];
}

std::size_t OccupancyState::pick_by_count(Rng& rng) const {
  return pick(rng, [](std::uint32_t k) { return static_cast<double>(k); });
}

std::size_t OccupancyState::pick_by_pairs(Rng& rng) const {
  return pick(rng, [](std::uint32_t k) { return 0.5 * static_cast<double>(k) * static_cast<double>(k - 1); });
}

std::size_t OccupancyState::pick_by_count_ge2(Rng& rng) const {
  return pick(rng, [](std::uint32_t k) { return k >= 2 ? static_cast<double>(k) : 0.0; });
}

EventRates event_rates(const OccupancyState& state, const ParticleParams& params) {
  EventRates r;
  const auto total = static_cast<double>(state.total());
  r.birth = params.s * total;
  r.death = params.d * static_cast<double>(state.pairs());
  if (params.unbounded()) {
    r.emigrate = params.c * (total - static_cast<double>(state.sites_with(1)));
    r.immigrate = params.c * params.iota * static_cast<double>(state.site_count());
  } else {
    r.migrate = params.c * total;
  }
  return r;
}

namespace {

// Chooses the event class in the fixed order birth, death, migrate,
// emigrate, immigrate.
EventType choose(const EventRates& r, Rng& rng) {
  double u = uniform01(rng) * r.total();
  const std::pair<EventType, double> table[] = {{EventType::birth, r.birth},
                                                {EventType::death, r.death},
                                                {EventType::migrate, r.migrate},
                                                {EventType::emigrate, r.emigrate},
                                                {EventType::immigrate, r.immigrate}};
  EventType last = EventType::none;
  for (const auto& [type, rate] : table) {
    if (rate <= 0.0) continue;
    last = type;
    if (u < rate) return type;
    u -= rate;
  }
  return last;
}

EventRecord apply_event(OccupancyState& state, const ParticleParams& params, EventType type, Rng& rng) {
  EventRecord ev{state.t, type, 0, 0};
  switch (type) {
    case EventType::birth:
      ev.site = ev.target = state.pick_by_count(rng);
      state.add_particle(ev.site);
      break;
    case EventType::death:
      ev.site = ev.target = state.pick_by_pairs(rng);
      state.remove_particle(ev.site);
      break;
    case EventType::migrate: {
      ev.site = state.pick_by_count(rng);
      const auto n = static_cast<double>(params.N);
      ev.target = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * n), params.N - 1);
      if (ev.target != ev.site) {
        state.remove_particle(ev.site);
        state.add_particle(ev.target);
      }
      break;
    }
    case EventType::emigrate:
      ev.site = state.pick_by_count_ge2(rng);
      state.remove_particle(ev.site);
      ev.target = state.lowest_empty_site();
      state.add_particle(ev.target);
      break;
    case EventType::immigrate: {
      const auto n = static_cast<double>(state.site_count());
      ev.site = ev.target = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * n), state.site_count() - 1);
      state.add_particle(ev.site);
      break;
    }
    case EventType::none:
      break;
  }
  return ev;
}

EventRecord step_generic(OccupancyState& state, const ParticleParams& params, Rng& rng) {
  const EventRates rates = event_rates(state, params);
  const double total = rates.total();
  if (!(total > 0.0)) return EventRecord{state.t, EventType::none, 0, 0};
  state.t += exponential(rng, total);
  return apply_event(state, params, choose(rates, rng), rng);
}

}  // namespace

EventRecord step_eta_finite(OccupancyState& state, const ParticleParams& params, Rng& rng) {
  if (params.unbounded()) throw std::invalid_argument("step_eta_finite: params describe the limit model");
  if (state.site_count() != params.N) throw std::invalid_argument("step_eta_finite: state has the wrong site count");
  return step_generic(state, params, rng);
}

EventRecord step_eta_limit(OccupancyState& state, const ParticleParams& params, Rng& rng) {
  if (!params.unbounded()) throw std::invalid_argument("step_eta_limit: params describe the finite model");
  if (params.iota > 0.0 && state.site_count() == 0) state.add_site();
  return step_generic(state, params, rng);
}

bool run_until(OccupancyState& state, const ParticleParams& params, double t_end, Rng& rng,
               std::vector<EventRecord>* log) {
  for (;;) {
    const EventRates rates = event_rates(state, params);
    const double total = rates.total();
    if (!(total > 0.0)) {
      state.t = t_end;
      return false;
    }
    const double next = state.t + exponential(rng, total);
    if (next > t_end) {
      state.t = t_end;
      return true;
    }
    state.t = next;
    const EventRecord ev = apply_event(state, params, choose(rates, rng), rng);
    if (log) log->push_back(ev);
  }
}

void replay_event(OccupancyState& state, const EventRecord& event) {
  state.t = event.t;
  const std::size_t hi = std::max(event.site, event.target);
  while (state.site_count() <= hi) state.add_site();
  switch (event.type) {
    case EventType::birth:
    case EventType::immigrate:
      state.add_particle(event.site);
      break;
    case EventType::death:
      state.remove_particle(event.site);
      break;
    case EventType::migrate:
    case EventType::emigrate:
      if (event.site != event.target) {
        state.remove_particle(event.site);
        state.add_particle(event.target);
      }
      break;
    case EventType::none:
      break;
  }
}

double SizeDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) m += static_cast<double>(k) * p[k];
  return m;
}

std::size_t default_kmax(double c, double s, double d, double iota) {
  if (!(d > 0.0)) throw std::invalid_argument("default_kmax: requires d > 0");
  return static_cast<std::size_t>(std::ceil(4.0 * (s / d + c * iota / d + 10.0)));
}

SizeDistribution single_site_equilibrium(double c, double s, double d, double iota, std::size_t k_max,
                                         EmigrationRule rule) {
  for (double v : {c, s, d, iota}) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("single_site_equilibrium: invalid rate");
  }
  SizeDistribution out;
  if (iota == 0.0) {
    out.p.assign(std::max<std::size_t>(k_max, 1) + 1, 0.0);
    out.p[0] = 1.0;
    return out;
  }
  if (!(d > 0.0)) throw std::invalid_argument("single_site_equilibrium: iota > 0 requires d > 0");
  if (k_max == 0) k_max = default_kmax(c, s, d, iota);
  // log pi_k up to a constant.
  std::vector<double> logp(k_max + 1, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    const double kk = static_cast<double>(k);
    const double up = s * kk + c * iota;
    const double j = kk + 1.0;
    const double emig = (rule == EmigrationRule::all_particles || j >= 2.0) ? c * j : 0.0;
    const double down = 0.5 * d * j * (j - 1.0) + emig;
    if (up <= 0.0) {
      logp.resize(k + 1);
      break;
    }
    if (down <= 0.0) {
      // k + 1 cannot be left downwards, so states 0..k carry no mass.
      for (std::size_t i = 0; i <= k; ++i) logp[i] = -std::numeric_limits<double>::infinity();
      logp[k + 1] = 0.0;
      continue;
    }
    logp[k + 1] = logp[k] + std::log(up) - std::log(down);
  }
  double peak = logp[0];
  for (double v : logp) peak = std::max(peak, v);
  out.p.resize(logp.size());
  double z = 0.0;
  for (std::size_t k = 0; k < logp.size(); ++k) z += out.p[k] = std::exp(logp[k] - peak);
  for (double& v : out.p) v /= z;
  const bool absorbed = logp.size() < k_max + 1;
  if (!absorbed && out.p.back() > 1e-10) {
    throw std::runtime_error("single_site_equilibrium: tail mass " + std::to_string(out.p.back()) +
                             " at K_max = " + std::to_string(k_max) + "; increase K_max");
  }
  out.p.resize(k_max + 1, 0.0);
  return out;
}

FixedPointResult self_consistent_intensity(double c, double s, double d, double tol, std::size_t max_iter,
                                           EmigrationRule rule) {
  if (!(tol > 0.0)) throw std::invalid_argument("self_consistent_intensity: tol must be positive");
  if (!(d > 0.0)) throw std::invalid_argument("self_consistent_intensity: requires d > 0");
  FixedPointResult res;
  double iota = s / d;
  res.history.push_back(iota);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const double image = single_site_equilibrium(c, s, d, iota, 0, rule).mean();
    const double next = 0.5 * iota + 0.5 * image;
    res.history.push_back(next);
    res.iterations = it;
    if (std::abs(next - iota) < tol) {
      iota = next;
      res.converged = true;
      break;
    }
    iota = next;
  }
  res.iota_star = iota;
  res.residual = std::abs(single_site_equilibrium(c, s, d, iota, 0, rule).mean() - iota);
  return res;
}

std::vector<std::vector<double>> intensity_trajectory(const ParticleParams& params, std::span<const double> t_grid,
                                                      std::size_t replicas, std::uint64_t seed) {
  params.validate();
  if (params.unbounded()) throw std::invalid_argument("intensity_trajectory: requires the finite model");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (t_grid[i] < t_grid[i - 1]) throw std::invalid_argument("intensity_trajectory: t_grid must be ascending");
  }
  std::vector<std::vector<double>> out(replicas, std::vector<double>(t_grid.size(), 0.0));
  const double n = static_cast<double>(params.N);
  parallel_for(replicas, [&](std::size_t r) {
    Rng rng = make_rng(seed, r);
    OccupancyState st = OccupancyState::seeded(params.N);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      run_until(st, params, t_grid[k], rng);
      out[r][k] = static_cast<double>(st.total()) / n;
    }
  });
  return out;
}

}  // namespace fwbrw
