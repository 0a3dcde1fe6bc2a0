#pragma once

// Limiting droplet process: Poissonized excursions of the single-site
// diffusion, each started at level eps, created at rate (m + c * mass) / S(eps).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fwbrw/fw_single.hpp"
#include "fwbrw/rng.hpp"

namespace fwbrw {

struct DropletAtom {
  double label = 0.0;
  double mass = 0.0;
  double birth = 0.0;
};

struct DropletState {
  std::vector<DropletAtom> active;
  double total_mass = 0.0;
  double t = 0.0;
};

struct DropletConfig {
  DiffusionParams params;  // m_bar is ignored (excursions run with m_bar = 0)
  double m = 0.0;
  double eps = 1e-2;
  double dt = 1e-3;
  StepScheme scheme = StepScheme::cir_frozen;
  double scale_at_eps = 0.0;  // S(eps), filled by make()

  static DropletConfig make(const DiffusionParams& params, double m, double eps, double dt,
                            StepScheme scheme = StepScheme::cir_frozen);
  // Rate of new eps-excursions given the current total mass.
  double spawn_intensity(double total_mass) const;
};

struct DropletStepStats {
  std::uint64_t spawned = 0;
  std::uint64_t died = 0;
};

void step_droplet(DropletState& state, const DropletConfig& config, Rng& rng, DropletStepStats* stats = nullptr);

struct GrowthOptions {
  double horizon = 10.0;
  std::size_t replicas = 100;
  double record_dt = 0.25;
  std::uint64_t seed = 0;
  // If > 0, W samples use this rate instead of the fitted one.
  double alpha_for_w = 0.0;
};

struct GrowthResult {
  std::vector<double> times;
  std::vector<double> mean_mass;    // ensemble mean of total mass at times[k]
  std::vector<double> mean_atoms;   // ensemble mean atom count
  std::vector<std::vector<double>> mass_paths;  // [replica][k]
  std::vector<std::vector<std::size_t>> atom_paths;
  double alpha_star = 0.0;
  double alpha_used_for_w = 0.0;
  std::vector<double> w_samples;    // exp(-alpha * t_end) * mass(t_end)
  bool degenerate = false;          // no usable tail window
};

// Fits log E[mass(t)] against t over the second half of the horizon.
GrowthResult growth_constant(const DropletConfig& config, const GrowthOptions& options);

}  // namespace fwbrw
