#pragma once

// Logistic branching random walk: the finite-N particle system, the limit
// process with immigration intensity iota (iota = 0 is the collision-free
// process), single-site equilibria and the self-consistent intensity.
//
// Death convention: a site holding k particles loses one at total rate
// d k (k-1) / 2, i.e. every unordered pair of particles at a site
// coalesces at rate d.

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "fwbrw/rng.hpp"

namespace fwbrw {

struct ParticleParams {
  double c = 0.0;
  double s = 0.0;
  double d = 0.0;
  // Number of sites of the finite model; 0 selects the limit model.
  std::size_t N = 0;
  // Immigration intensity of the limit model (each tracked site receives
  // immigrants at rate c * iota).
  double iota = 0.0;

  bool unbounded() const { return N == 0; }
  void validate() const;
};

enum class EventType { none, birth, death, migrate, emigrate, immigrate };

std::string_view event_name(EventType type);

struct EventRecord {
  double t = 0.0;
  EventType type = EventType::none;
  std::size_t site = 0;    // site where the event happens (source for moves)
  std::size_t target = 0;  // destination of migrate / emigrate, else == site
};

// Site -> particle count with per-count buckets, so weighted site selection
// costs O(number of distinct counts).
class OccupancyState {
 public:
  explicit OccupancyState(std::size_t sites = 0);
  // k particles at site 0 of a system with the given number of sites.
  static OccupancyState seeded(std::size_t sites, std::uint32_t k = 1);

  std::size_t site_count() const { return counts_.size(); }
  std::uint32_t count(std::size_t site) const { return counts_.at(site); }
  std::uint64_t total() const { return total_; }
  std::size_t occupied() const { return site_count() - empty_.size(); }
  // Number of unordered same-site pairs, sum_i k_i (k_i - 1) / 2.
  std::uint64_t pairs() const { return pairs_; }
  std::size_t sites_with(std::uint32_t k) const;
  // Time at which the site was last turned from empty to occupied.
  double occupied_since(std::size_t site) const { return since_.at(site); }
  std::span<const std::uint32_t> counts() const { return counts_; }

  void add_particle(std::size_t site);
  void remove_particle(std::size_t site);
  // Appends an empty site and returns its index.
  std::size_t add_site();
  // Lowest-index empty site, appending a new one if every site is occupied.
  std::size_t lowest_empty_site();

  // Draws an occupied site with probability proportional to w(k).
  std::size_t pick_by_count(Rng& rng) const;        // w = k
  std::size_t pick_by_pairs(Rng& rng) const;        // w = k (k-1) / 2
  std::size_t pick_by_count_ge2(Rng& rng) const;    // w = k 1{k >= 2}

  double t = 0.0;

 private:
  template <class W>
  std::size_t pick(Rng& rng, W weight) const;
  void bucket_insert(std::size_t site, std::uint32_t k);
  void bucket_erase(std::size_t site, std::uint32_t k);

  std::vector<std::uint32_t> counts_;
  std::vector<double> since_;
  std::vector<std::size_t> slot_;                 // position of the site in its bucket
  std::vector<std::vector<std::size_t>> buckets_;  // buckets_[k] = sites with k particles
  std::vector<std::uint32_t> nonempty_;           // counts k with a non-empty bucket
  std::vector<std::size_t> nonempty_slot_;
  std::set<std::size_t> empty_;
  std::uint64_t total_ = 0;
  std::uint64_t pairs_ = 0;
};

struct EventRates {
  double birth = 0.0;
  double death = 0.0;
  double migrate = 0.0;
  double emigrate = 0.0;
  double immigrate = 0.0;

  double total() const { return birth + death + migrate + emigrate + immigrate; }
};

EventRates event_rates(const OccupancyState& state, const ParticleParams& params);

// One Gillespie step of the finite-N model. Returns type none (and leaves
// the state untouched) once the total rate is 0.
EventRecord step_eta_finite(OccupancyState& state, const ParticleParams& params, Rng& rng);

// One Gillespie step of the limit model. Emigrants from sites with k >= 2
// occupy the lowest-index empty site; immigrants land on a uniform tracked site.
EventRecord step_eta_limit(OccupancyState& state, const ParticleParams& params, Rng& rng);

// Advances until the next event would pass t_end; state.t is then set to t_end.
// Appends events to log when given. Returns false on extinction.
bool run_until(OccupancyState& state, const ParticleParams& params, double t_end, Rng& rng,
               std::vector<EventRecord>* log = nullptr);

// Re-applies a recorded event (sets state.t to the event time first).
void replay_event(OccupancyState& state, const EventRecord& event);

struct SizeDistribution {
  std::vector<double> p;  // p[k], k = 0..K_max

  double mean() const;
};

enum class EmigrationRule {
  // Rate c k for every k >= 1, as in the finite-N model.
  all_particles,
  // Rate c k only for k >= 2, as for the limit process.
  collision_free,
};

// K_max default ceil(4 (s/d + c iota / d + 10)).
std::size_t default_kmax(double c, double s, double d, double iota);

// Stationary law of the single-site chain with up-rate s k + c iota and
// down-rate d k (k-1) / 2 + emigration, by detailed balance on {0..K_max}.
// Throws std::runtime_error if the mass at K_max exceeds 1e-10.
SizeDistribution single_site_equilibrium(double c, double s, double d, double iota, std::size_t k_max = 0,
                                         EmigrationRule rule = EmigrationRule::all_particles);

struct FixedPointResult {
  double iota_star = 0.0;
  double trivial = 0.0;  // 0 is always a fixed point
  std::size_t iterations = 0;
  bool converged = false;
  double residual = 0.0;        // |mean(pi_iota*) - iota*|
  std::vector<double> history;  // iterates, for oscillation diagnostics
};

// Damped iteration iota <- iota / 2 + mean(pi_iota) / 2 from iota = s / d.
FixedPointResult self_consistent_intensity(double c, double s, double d, double tol = 1e-12,
                                           std::size_t max_iter = 10000,
                                           EmigrationRule rule = EmigrationRule::all_particles);

// N^-1 * total particle count at t_grid for each replica, from one particle
// at site 0 of the finite model.
std::vector<std::vector<double>> intensity_trajectory(const ParticleParams& params, std::span<const double> t_grid,
                                                      std::size_t replicas, std::uint64_t seed);

}  // namespace fwbrw
