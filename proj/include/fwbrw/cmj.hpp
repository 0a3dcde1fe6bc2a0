#pragma once

// Crump-Mode-Jagers bookkeeping on the collision-free process: occupied-site
// counts, age-size histograms and three estimators of the Malthusian rate.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fwbrw/particles.hpp"

namespace fwbrw {

struct AgeSizeHistogram {
  double age_bin = 1.0;     // width of an age bin
  std::size_t age_bins = 0;
  std::size_t j_max = 0;
  std::vector<double> weights;  // weights[a * j_max + (j - 1)]
  double overflow = 0.0;        // weight of sites with more than j_max particles
  bool normalized = false;

  double& at(std::size_t age_index, std::size_t j) { return weights[age_index * j_max + (j - 1)]; }
  double at(std::size_t age_index, std::size_t j) const { return weights[age_index * j_max + (j - 1)]; }
  double total() const;  // including overflow
  // Size marginal indexed by j (entry 0 unused and zero).
  std::vector<double> size_marginal() const;
  // Adds the weights of another histogram of identical shape.
  void accumulate(const AgeSizeHistogram& other);
  AgeSizeHistogram normalized_copy() const;
};

AgeSizeHistogram make_histogram(double age_bin, double max_age, std::size_t j_max);

// Histogram of (t - occupied_since, count) over the occupied sites.
AgeSizeHistogram age_size_snapshot(const OccupancyState& state, double age_bin, double max_age, std::size_t j_max,
                                   bool normalize);

// Replays the event log from the initial state up to time t and bins the
// occupied sites. Ages reset whenever a site is re-occupied after emptying.
AgeSizeHistogram track_age_size(const OccupancyState& initial, std::span<const EventRecord> log, double t,
                                double age_bin, std::size_t j_max, bool normalize);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

// mu([0, t]) = c int_0^t E[zeta(u) 1{zeta(u) >= 2}] du for the internal
// single-site chain zeta (birth s k, death d k(k-1)/2, emigrants discarded
// at rate c k 1{k >= 2}) started from one particle.
struct BirthIntensityCurve {
  std::vector<double> t_grid;
  std::vector<double> mu_hat;
  std::vector<double> se;  // Monte Carlo standard error of mu_hat
};

// Path integrals are exact for the piecewise-constant chain.
BirthIntensityCurve estimate_mu(double c, double s, double d, std::span<const double> t_grid, std::size_t replicas,
                                std::uint64_t seed);

struct MalthusianResult {
  double alpha = 0.0;
  double residual = 0.0;   // |Laplace transform at alpha - 1|
  bool bracketed = false;  // false: no sign change on [1e-6, upper]
  double tail_rate = 0.0;  // slope of mu used beyond the grid
};

// Laplace transform of the measure induced by mu_hat increments (evaluated
// at interval midpoints) plus the tail tail_rate * exp(-alpha T) / alpha,
// tail_rate being the mean slope over the last tail_fraction of the grid.
double laplace_transform(const BirthIntensityCurve& mu, double alpha, double tail_rate);

// Root of the Laplace transform = 1 by bisection on [1e-6, upper].
MalthusianResult malthusian_alpha(const BirthIntensityCurve& mu, double upper, double tail_fraction = 0.2);

struct GrowthFit {
  double alpha_reg = 0.0;
  double r_squared = 0.0;
  std::vector<double> w_samples;  // K_T exp(-alpha_reg T)
  std::size_t used = 0;           // non-extinct trajectories
  bool degenerate = false;
};

// Least-squares slope of log mean K over the final tail_fraction of the grid.
GrowthFit growth_rate_fit(std::span<const double> times, const std::vector<std::vector<double>>& k_paths,
                          double tail_fraction = 0.5);

struct CMJRates {
  double alpha = 0.0;
  double gamma = 0.0;
  double B = 0.0;
};

// alpha = c sum_{j>=2} j U(j), gamma = c U(1), B = (alpha + gamma) / c.
CMJRates cmj_rates(const AgeSizeHistogram& stable, double c);

struct CollisionFreeOptions {
  std::vector<double> times;            // sampling grid for K_t and totals
  std::vector<double> snapshot_times;   // pooled age-size histograms
  std::size_t replicas = 100;
  std::uint64_t seed = 0;
  double age_bin = 0.25;
  std::size_t j_max = 0;  // 0 selects 4 (s/d + 10)
};

struct CollisionFreeEnsemble {
  std::vector<double> times;
  std::vector<std::vector<double>> occupied;  // [replica][k] K_t
  std::vector<std::vector<double>> totals;    // [replica][k] particle count
  std::vector<AgeSizeHistogram> snapshots;    // unnormalized, pooled over replicas
};

// Runs the collision-free process from one particle per replica.
CollisionFreeEnsemble simulate_collision_free(double c, double s, double d, const CollisionFreeOptions& options);

}  // namespace fwbrw
