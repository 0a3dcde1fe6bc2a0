#pragma once

// Deterministic solvers: the McKean-Vlasov density equation for the
// favoured-type frequency, and the colonization system (u, U) for the
// fraction of occupied sites and their size distribution.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fwbrw {

struct MkvParams {
  double c = 0.0;
  double s = 0.0;
  double d = 0.0;
};

// Probability masses on the nodes x_i = i / (M - 1), i = 0..M-1.
struct DensityGrid {
  std::vector<double> x;
  std::vector<double> mass;
  double t = 0.0;

  static DensityGrid uniform(std::size_t nodes);
  // All mass on the node nearest to y0.
  static DensityGrid point_mass(std::size_t nodes, double y0);
  std::size_t size() const { return x.size(); }
  double spacing() const { return 1.0 / static_cast<double>(x.size() - 1); }
  double mean() const;
  double total() const;
};

class CflError : public std::runtime_error {
 public:
  CflError(const std::string& what, double suggested_dt) : std::runtime_error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

// Largest stable explicit step for the current grid mean.
double mkv_max_dt(const DensityGrid& grid, const MkvParams& params);

// One SSP-RK2 step of the nearest-neighbour jump chain whose generator
// discretizes  du/dt = -d/dx[(c(m - x) + s x(1-x)) u] + (d/2) d2/dx2[x(1-x) u].
// Mass is conserved exactly and the mean moves by exactly sum_i b(x_i) p_i.
// Throws CflError if dt exceeds the stability bound.
DensityGrid step_mkv_pde(const DensityGrid& grid, const MkvParams& params, double dt);

struct MeanCurve {
  std::vector<double> t;
  std::vector<double> m;
  double max_mass_drift_per_1000 = 0.0;  // largest |total - 1| change over any 1000 steps
  std::size_t steps = 0;
  DensityGrid final_grid;
};

// Integrates to the horizon with a fixed step (dt = 0 selects 0.9 of the
// initial CFL bound, re-checked at every step) and records the mean every
// record_dt.
MeanCurve run_mkv_to_fixation(DensityGrid grid, const MkvParams& params, double horizon, double dt = 0.0,
                              double record_dt = 0.1);

// Size distribution Usize(j), j = 1..J_max (index 0 unused).
struct ColonizationState {
  double u = 0.0;
  std::vector<double> usize;
  double t = 0.0;

  std::size_t j_max() const { return usize.size() - 1; }
  double size_mass() const;
  double nu_norm() const;  // sum (1 + j^2) Usize(j)
};

struct ColonizationRates {
  double alpha = 0.0;  // c sum_{j>=2} j Usize(j)
  double gamma = 0.0;  // c Usize(1)
};

ColonizationRates colonization_rates(const ColonizationState& state, double c);

// du/dt = alpha (1 - u) u - gamma u^2.
double colonization_u_derivative(double u, const ColonizationRates& rates);

// Default J_max = ceil(4 (s/d + 10)).
std::size_t default_jmax(double s, double d);

// Largest out-rate of the size chain; explicit steps need dt * rate <= 1.
double colonization_max_rate(const ColonizationState& state, const MkvParams& params);

// One Heun step of the age-marginalized size system together with
// du/dt = alpha (1 - u) u - gamma u^2. Transitions leaving J_max are
// suppressed. Throws std::runtime_error on entries below -1e-12.
ColonizationState step_colonization(const ColonizationState& state, const MkvParams& params, double dt);

struct StableSize {
  std::vector<double> usize;  // index 0 unused
  double alpha = 0.0;
  double gamma = 0.0;
  double residual = 0.0;
};

// Fixed point of the size system at u = 0 (stable size marginal of the
// collision-free process) with its growth rate alpha.
StableSize stable_size_distribution(const MkvParams& params, std::size_t j_max = 0, double tol = 1e-13);

struct EntranceTrajectory {
  std::vector<double> t;
  std::vector<double> u;
  std::vector<double> scaled;  // exp(-alpha t) u(t)
  std::vector<double> size_mass;
  std::vector<double> nu_norm;
  std::vector<std::string> warnings;
  double alpha = 0.0;
};

struct EntranceOptions {
  double A = 1.0;
  double t_start = -20.0;
  double t_end = 10.0;
  double dt = 0.0;  // 0 selects 0.5 / max out-rate
  double record_dt = 0.1;
  double alpha = 0.0;  // 0 selects the stable-size alpha
};

// Starts from u = A exp(alpha t_start) with Usize = stable and integrates forward.
EntranceTrajectory entrance_shoot(const MkvParams& params, const StableSize& stable, const EntranceOptions& options);

}  // namespace fwbrw
