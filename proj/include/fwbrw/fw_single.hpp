#pragma once

// Single-site Fisher-Wright diffusion numerics: time stepping, the scale
// function, hitting probabilities and excursions away from 0.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fwbrw/rng.hpp"

namespace fwbrw {

// Parameters of dy = c (m_bar - y) dt + s y (1-y) dt + sqrt(d y (1-y)) dW,
// y being the frequency of the favoured type.
struct DiffusionParams {
  double c = 0.0;
  double s = 0.0;
  double d = 0.0;
  double m_bar = 0.0;

  void validate() const;
};

enum class StepScheme {
  // Euler-Maruyama followed by clamping to [0,1].
  euler_clamp,
  // Exact transition of the square-root (CIR) diffusion obtained by freezing
  // the factor (1-y) of the side nearest to its boundary over one step. Keeps
  // 0 and 1 exactly absorbing/attainable without clamping bias.
  cir_frozen,
};

struct StepDiagnostics {
  std::uint64_t steps = 0;
  std::uint64_t clamped = 0;

  void merge(const StepDiagnostics& other) {
    steps += other.steps;
    clamped += other.clamped;
  }
};

// One Euler-Maruyama step driven by a standard normal draw.
double step_fw(double state, const DiffusionParams& params, double dt, double noise,
               StepDiagnostics* diag = nullptr);

// General frequency drift used by both the single-site and the spatial model:
//   b(y) = c (target - y) + s y (1-y) + mu (1-y),  diffusion d y (1-y).
struct FwDrift {
  double c = 0.0;
  double target = 0.0;
  double s = 0.0;
  double mu = 0.0;
  double d = 0.0;
};

// Exact step of dY = (a + b Y) dt + sqrt(sigma2 Y) dW over time h (a >= 0,
// sigma2 >= 0), sampled as a Poisson mixture of gamma variables.
double cir_step(double y, double a, double b, double sigma2, double h, Rng& rng);

double step_fw_cir(double y, const FwDrift& drift, double dt, Rng& rng, StepDiagnostics* diag = nullptr);

double step_fw_scheme(double y, const DiffusionParams& params, double dt, StepScheme scheme, Rng& rng,
                      StepDiagnostics* diag = nullptr);

// S(x) = int_0^x exp(-2 s y / d) (1-y)^(-2c/d) dy. Requires d > 0 and 0 <= x < 1.
double scale_function(const DiffusionParams& params, double x);

// P_eps(T_eta < infinity) = S(eps) / S(eta) for 0 < eps < eta < 1.
double hitting_probability(const DiffusionParams& params, double eps, double eta);

struct ScaleTable {
  std::vector<double> grid;
  std::vector<double> values;
  DiffusionParams params;
};

// Tabulates S on an ascending mesh of [0,1) starting at 0.
ScaleTable make_scale_table(const DiffusionParams& params, std::vector<double> grid);

struct ExcursionSample {
  double t = 0.0;
  double w = 0.0;
};

struct ExcursionPath {
  double start_time = 0.0;
  std::vector<ExcursionSample> samples;
  // Time of the first step at or below 0; +infinity if the step cap was hit
  // or the path was stopped at the upper level first.
  double lifetime = std::numeric_limits<double>::infinity();
  double sup = 0.0;
  bool capped = false;
  bool reached_stop_level = false;
};

struct ExcursionOptions {
  std::size_t max_steps = 1'000'000;
  StepScheme scheme = StepScheme::cir_frozen;
  bool record_samples = true;
  // Stop as soon as the path reaches this level (used by hitting studies).
  // Crossings between steps are detected with a Brownian-bridge test.
  std::optional<double> stop_level;
};

// Path started at eps and run with m_bar = 0 until it first reaches 0.
ExcursionPath sample_excursion(const DiffusionParams& params, double eps, double dt, Rng& rng,
                               const ExcursionOptions& options = {});

}  // namespace fwbrw
