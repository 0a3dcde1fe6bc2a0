#include "fwbrw/fw_meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fwbrw/parallel.hpp"
#include "fwbrw/simd/kernels.hpp"

namespace fwbrw {

double SystemParams::default_dt() const {
  const double total = c + s + d + mutation_rate();
  return 1e-3 * std::min(1.0, total > 0.0 ? 1.0 / total : 1.0);
}

void SystemParams::validate() const {
  if (N < 1) throw std::invalid_argument("SystemParams: N must be >= 1");
  for (double v : {c, s, d, m, L}) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("SystemParams: rates must be finite and >= 0");
  }
}

FrequencyState step_system(FrequencyState state, const SystemParams& params, double dt, Rng& rng,
                           StepDiagnostics* diag) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step_system: dt must be positive");
  for (double x : state.x1) {
    if (!std::isfinite(x)) throw std::invalid_argument("step_system: non-finite frequency");
  }
  const std::size_t n = state.x1.size();
  // Simultaneous update: every site sees the mean from the start of the step.
  const double mean1 = empirical_mean(state, TypeIndex::one);
  std::uint64_t clamped = 0;
  if (params.scheme == StepScheme::euler_clamp) {
    thread_local std::vector<double> normals;
    normals.resize(n);
    for (double& z : normals) z = standard_normal(rng);
    const simd::EulerCoeffs k{params.c, mean1, -params.s, 0.0, params.mutation_rate(), params.d, dt};
    clamped = simd::fw_euler_step(state.x1, normals, k);
  } else {
    const FwDrift drift{params.c, 1.0 - mean1, params.s, params.mutation_rate(), params.d};
    StepDiagnostics local;
    for (double& x : state.x1) x = 1.0 - step_fw_cir(1.0 - x, drift, dt, rng, &local);
    clamped = local.clamped;
  }
  state.t += dt;
  if (diag) {
    diag->steps += n;
    diag->clamped += clamped;
  }
  return state;
}

double empirical_mean(const FrequencyState& state, TypeIndex type) {
  if (state.x1.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double mean1 = simd::sum(state.x1) / static_cast<double>(state.x1.size());
  return type == TypeIndex::one ? mean1 : 1.0 - mean1;
}

double AtomicMassMeasure::total_mass() const {
  double total = 0.0;
  for (const Atom& a : atoms) total += a.mass;
  return total;
}

std::vector<double> draw_labels(std::size_t n, Rng& rng) {
  std::vector<double> labels(n);
  for (double& a : labels) a = uniform01(rng);
  return labels;
}

AtomicMassMeasure droplet_measure(const FrequencyState& state, std::span<const double> labels) {
  if (labels.size() != state.x1.size()) throw std::invalid_argument("droplet_measure: one label per site required");
  AtomicMassMeasure measure;
  for (std::size_t j = 0; j < state.x1.size(); ++j) {
    const double mass = 1.0 - state.x1[j];
    if (mass > AtomicMassMeasure::mass_floor) measure.atoms.push_back({labels[j], mass});
  }
  return measure;
}

EmpiricalMeasure empirical_distribution(const FrequencyState& state, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("empirical_distribution: need at least 2 bins");
  EmpiricalMeasure out{std::vector<double>(bins, 0.0), state.x1.size()};
  if (state.x1.empty()) return out;
  const double w = 1.0 / static_cast<double>(state.x1.size());
  for (double x1 : state.x1) {
    const double x2 = 1.0 - x1;
    auto k = static_cast<std::size_t>(x2 * static_cast<double>(bins));
    out.bins[std::min(k, bins - 1)] += w;
  }
  return out;
}

EmergenceResult emergence_experiment(const SystemParams& params, const EmergenceOptions& options) {
  params.validate();
  if (!(options.alpha_hat > 0.0)) throw std::invalid_argument("emergence_experiment: alpha_hat must be positive");
  if (options.replicas < 1) throw std::invalid_argument("emergence_experiment: replicas must be >= 1");
  if (!(options.t_hi >= options.t_lo) || !(options.sample_dt > 0.0)) {
    throw std::invalid_argument("emergence_experiment: invalid time window");
  }
  const double dt = options.dt > 0.0 ? options.dt : params.default_dt();

  EmergenceResult result;
  result.time_shift = std::log(static_cast<double>(params.N)) / options.alpha_hat;
  const auto samples = static_cast<std::size_t>(std::floor((options.t_hi - options.t_lo) / options.sample_dt + 1e-9)) + 1;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = options.t_lo + static_cast<double>(k) * options.sample_dt;
    result.offsets.push_back(t);
    // Times before 0 are truncated to the initial state.
    result.abs_times.push_back(std::max(0.0, result.time_shift + t));
  }
  const double window_end = result.abs_times.back();
  const double run_end = std::max(window_end, options.takeover_time_cap);

  result.replicas.resize(options.replicas);
  parallel_for(options.replicas, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, r);
    EmergenceReplica& rep = result.replicas[r];
    rep.half_takeover = std::numeric_limits<double>::infinity();
    FrequencyState state = FrequencyState::all_type1(params.N);
    std::size_t next = 0;
    std::uint64_t step = 0;
    auto record_due = [&] {
      while (next < samples && result.abs_times[next] <= state.t + 1e-12) {
        const double mean2 = empirical_mean(state, TypeIndex::two);
        rep.mean_type2.push_back(mean2);
        rep.droplet_mass.push_back(mean2 * static_cast<double>(params.N));
        ++next;
      }
    };
    record_due();
    while (next < samples || (!std::isfinite(rep.half_takeover) && state.t < run_end)) {
      state = step_system(std::move(state), params, dt, rng, &rep.diagnostics);
      ++step;
      state.t = static_cast<double>(step) * dt;
      if (!std::isfinite(rep.half_takeover) && empirical_mean(state, TypeIndex::two) >= 0.5) {
        rep.half_takeover = state.t;
      }
      record_due();
    }
  });
  return result;
}

}  // namespace fwbrw
