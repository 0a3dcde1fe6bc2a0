#pragma once

// Monte Carlo checks of the dualities between the Fisher-Wright models and
// the particle models.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fwbrw/fw_meanfield.hpp"
#include "fwbrw/fw_single.hpp"
#include "fwbrw/particles.hpp"

namespace fwbrw {

struct DualityReport {
  double lhs_mean = 0.0;
  double lhs_se = 0.0;
  double rhs_mean = 0.0;
  double rhs_se = 0.0;  // 0 for a closed-form side
  double z_score = 0.0;
  bool pass = false;
};

DualityReport make_report(double lhs_mean, double lhs_se, double rhs_mean, double rhs_se, double threshold = 3.0);

// P(D_t = j | D_0 = k) for the pure-death chain n -> n-1 at rate d n (n-1) / 2,
// from the hypoexponential formula (distinct rates). Index j = 0..k.
std::vector<double> death_chain_law(std::size_t k, double d, double t);

// E[x0^{D_t}]: closed form for k <= 3, Monte Carlo (with standard error) otherwise.
struct DualExpectation {
  double mean = 0.0;
  double se = 0.0;
};
DualExpectation death_chain_moment(double x0, double d, std::size_t k, double t, std::size_t replicas, Rng& rng);

struct MomentDualityOptions {
  std::size_t replicas = 100000;
  double dt = 1e-3;
  StepScheme scheme = StepScheme::cir_frozen;
  std::uint64_t seed = 0;
  double threshold = 3.0;
};

// E[X_t^k] of the neutral diffusion against E[x0^{D_t}], for every k in ks,
// reusing one set of diffusion paths.
std::vector<DualityReport> check_moment_duality(double x0, double d, std::span<const std::size_t> ks, double t,
                                                const MomentDualityOptions& options);
DualityReport check_moment_duality(double x0, double d, std::size_t k, double t, const MomentDualityOptions& options);

struct OccupationPath {
  std::vector<double> times;   // jump times, starting at 0
  std::vector<double> counts;  // Pi on [times[i], times[i+1])
  double integral = 0.0;       // int_0^t Pi_u du (exact)
};

// Total particle count of the finite model from one particle at site 0.
OccupationPath dual_occupation(const ParticleParams& params, double t, Rng& rng);

struct SpatialDualityOptions {
  std::size_t replicas = 100000;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  double threshold = 3.0;
};

// LHS E[x1(i,t)] of the system started all ones (site average, which has the
// same expectation by exchangeability); RHS E[exp(-(m/L) int_0^t Pi du)].
DualityReport check_spatial_duality(const SystemParams& params, double t, const SpatialDualityOptions& options);

struct TimescaleResult {
  std::vector<double> L;
  std::vector<double> medians;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool log_scale = false;  // slope is against log L (d = 0) or against L (d > 0)
};

// Median time at which (m/L) int_0^t Pi du reaches 1 for the one-site dual.
TimescaleResult single_site_timescale(double s, double d, std::span<const double> L_grid, std::size_t replicas,
                                      std::uint64_t seed, double m = 1.0);

}  // namespace fwbrw
