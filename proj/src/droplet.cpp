#include "fwbrw/droplet.hpp"

#include <cmath>
#include <stdexcept>

#include "fwbrw/parallel.hpp"
#include "fwbrw/stats.hpp"

namespace fwbrw {

DropletConfig DropletConfig::make(const DiffusionParams& params, double m, double eps, double dt,
                                  StepScheme scheme) {
  params.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("DropletConfig: eps must lie in (0,1)");
  if (!(dt > 0.0)) throw std::invalid_argument("DropletConfig: dt must be positive");
  if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("DropletConfig: m must be >= 0");
  DropletConfig cfg{params, m, eps, dt, scheme, 0.0};
  cfg.params.m_bar = 0.0;
  cfg.scale_at_eps = scale_function(cfg.params, eps);
  return cfg;
}

double DropletConfig::spawn_intensity(double total_mass) const {
  return (m + params.c * total_mass) / scale_at_eps;
}

void step_droplet(DropletState& state, const DropletConfig& config, Rng& rng, DropletStepStats* stats) {
  const double spawn_rate = config.spawn_intensity(state.total_mass);
  const FwDrift drift{config.params.c, 0.0, config.params.s, 0.0, config.params.d};

  double total = 0.0;
  std::size_t i = 0;
  while (i < state.active.size()) {
    DropletAtom& atom = state.active[i];
    if (config.scheme == StepScheme::cir_frozen) {
      atom.mass = step_fw_cir(atom.mass, drift, config.dt, rng);
    } else {
      const double var = std::max(atom.mass * (1.0 - atom.mass), 0.0);
      const double raw = atom.mass + (-drift.c * atom.mass + drift.s * var) * config.dt +
                         std::sqrt(drift.d * var * config.dt) * standard_normal(rng);
      atom.mass = raw <= 0.0 ? 0.0 : std::min(raw, 1.0);
    }
    if (atom.mass <= 0.0) {
      state.active[i] = state.active.back();
      state.active.pop_back();
      if (stats) ++stats->died;
      continue;
    }
    total += atom.mass;
    ++i;
  }

  if (spawn_rate > 0.0) {
    std::poisson_distribution<std::int64_t> births(spawn_rate * config.dt);
    const std::int64_t n = births(rng);
    for (std::int64_t k = 0; k < n; ++k) {
      state.active.push_back({uniform01(rng), config.eps, state.t + config.dt});
      total += config.eps;
    }
    if (stats) stats->spawned += static_cast<std::uint64_t>(n);
  }
  state.total_mass = total;
  state.t += config.dt;
}

GrowthResult growth_constant(const DropletConfig& config, const GrowthOptions& options) {
  if (!(config.m > 0.0)) throw std::invalid_argument("growth_constant: requires m > 0");
  if (options.replicas < 1 || !(options.horizon > 0.0) || !(options.record_dt > 0.0)) {
    throw std::invalid_argument("growth_constant: invalid options");
  }
  GrowthResult out;
  const auto n_records = static_cast<std::size_t>(std::floor(options.horizon / options.record_dt + 1e-9)) + 1;
  for (std::size_t k = 0; k < n_records; ++k) out.times.push_back(static_cast<double>(k) * options.record_dt);
  const auto total_steps = static_cast<std::uint64_t>(std::llround(out.times.back() / config.dt));

  out.mass_paths.assign(options.replicas, std::vector<double>(n_records, 0.0));
  out.atom_paths.assign(options.replicas, std::vector<std::size_t>(n_records, 0));
  parallel_for(options.replicas, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, r);
    DropletState state;
    std::size_t next = 1;
    for (std::uint64_t step = 1; step <= total_steps; ++step) {
      step_droplet(state, config, rng);
      state.t = static_cast<double>(step) * config.dt;
      while (next < n_records && out.times[next] <= state.t + 1e-12) {
        out.mass_paths[r][next] = state.total_mass;
        out.atom_paths[r][next] = state.active.size();
        ++next;
      }
    }
  });

  out.mean_mass.assign(n_records, 0.0);
  out.mean_atoms.assign(n_records, 0.0);
  for (std::size_t r = 0; r < options.replicas; ++r) {
    for (std::size_t k = 0; k < n_records; ++k) {
      out.mean_mass[k] += out.mass_paths[r][k];
      out.mean_atoms[k] += static_cast<double>(out.atom_paths[r][k]);
    }
  }
  for (std::size_t k = 0; k < n_records; ++k) {
    out.mean_mass[k] /= static_cast<double>(options.replicas);
    out.mean_atoms[k] /= static_cast<double>(options.replicas);
  }

  std::vector<double> tx, ty;
  for (std::size_t k = 0; k < n_records; ++k) {
    if (out.times[k] >= 0.5 * options.horizon && out.mean_mass[k] > 0.0) {
      tx.push_back(out.times[k]);
      ty.push_back(std::log(out.mean_mass[k]));
    }
  }
  if (tx.size() < 2) {
    out.degenerate = true;
  } else {
    out.alpha_star = stats::linear_fit(tx, ty).slope;
  }
  out.alpha_used_for_w = options.alpha_for_w > 0.0 ? options.alpha_for_w : out.alpha_star;
  const double scale = std::exp(-out.alpha_used_for_w * out.times.back());
  for (std::size_t r = 0; r < options.replicas; ++r) out.w_samples.push_back(scale * out.mass_paths[r].back());
  return out;
}

}  // namespace fwbrw
