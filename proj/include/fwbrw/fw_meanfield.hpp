#pragma once

// N-site mean-field Fisher-Wright system with selection and rare mutation
// from type 1 (inferior) to type 2 (advantageous).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fwbrw/fw_single.hpp"
#include "fwbrw/rng.hpp"

namespace fwbrw {

struct SystemParams {
  std::size_t N = 1;
  double c = 0.0;
  double s = 0.0;
  double d = 0.0;
  double m = 0.0;
  // Mutation denominator; 0 means L = N.
  double L = 0.0;
  StepScheme scheme = StepScheme::cir_frozen;

  double mutation_denominator() const { return L > 0.0 ? L : static_cast<double>(N); }
  double mutation_rate() const { return m / mutation_denominator(); }
  // 1e-3 * min(1, 1 / (c + s + d + m/L)).
  double default_dt() const;
  void validate() const;
};

// Type-1 frequencies x1(i); the type-2 frequency is 1 - x1(i).
struct FrequencyState {
  std::vector<double> x1;
  double t = 0.0;

  static FrequencyState all_type1(std::size_t n) { return {std::vector<double>(n, 1.0), 0.0}; }
  std::size_t size() const { return x1.size(); }
};

enum class TypeIndex { one = 1, two = 2 };

FrequencyState step_system(FrequencyState state, const SystemParams& params, double dt, Rng& rng,
                           StepDiagnostics* diag = nullptr);

double empirical_mean(const FrequencyState& state, TypeIndex type);

struct AtomicMassMeasure {
  struct Atom {
    double label = 0.0;
    double mass = 0.0;
  };
  static constexpr double mass_floor = 1e-12;

  std::vector<Atom> atoms;
  double total_mass() const;
};

// i.i.d. uniform site labels, drawn once per run.
std::vector<double> draw_labels(std::size_t n, Rng& rng);

// sum_j x2(j) delta_{a(j)}, keeping atoms with mass above the floor.
AtomicMassMeasure droplet_measure(const FrequencyState& state, std::span<const double> labels);

struct EmpiricalMeasure {
  std::vector<double> bins;  // masses of [k/B, (k+1)/B), last bin closed at 1
  std::size_t samples = 0;
};

EmpiricalMeasure empirical_distribution(const FrequencyState& state, std::size_t bins = 100);

struct EmergenceOptions {
  double alpha_hat = 0.0;
  double t_lo = -5.0;
  double t_hi = 5.0;
  double sample_dt = 0.25;
  std::size_t replicas = 1;
  double dt = 0.0;  // 0 selects params.default_dt()
  // Keep simulating past the window until half takeover, up to this absolute time.
  double takeover_time_cap = 0.0;
  std::uint64_t seed = 0;
};

struct EmergenceReplica {
  std::vector<double> mean_type2;    // at offsets[k]
  std::vector<double> droplet_mass;  // N * mean_type2
  double half_takeover = 0.0;        // absolute time of first x2_bar >= 1/2, +inf if never
  StepDiagnostics diagnostics;
};

struct EmergenceResult {
  double time_shift = 0.0;          // log(N) / alpha_hat
  std::vector<double> offsets;      // t in the shifted window
  std::vector<double> abs_times;    // max(0, shift + t)
  std::vector<EmergenceReplica> replicas;
};

EmergenceResult emergence_experiment(const SystemParams& params, const EmergenceOptions& options);

}  // namespace fwbrw
