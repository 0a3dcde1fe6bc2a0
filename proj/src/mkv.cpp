#include "fwbrw/mkv.hpp"

#include <algorithm>
#include <cmath>

#include "fwbrw/simd/kernels.hpp"

namespace fwbrw {

namespace {

std::vector<double> node_positions(std::size_t nodes) {
  if (nodes < 3) throw std::invalid_argument("DensityGrid: need at least 3 nodes");
  std::vector<double> x(nodes);
  const double h = 1.0 / static_cast<double>(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i) x[i] = static_cast<double>(i) * h;
  x.back() = 1.0;
  return x;
}

void validate(const MkvParams& p) {
  for (double v : {p.c, p.s, p.d}) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("MkvParams: rates must be finite and >= 0");
  }
}

simd::ChainCoeffs coeffs(const DensityGrid& g, const MkvParams& p, double mean, double dt) {
  return simd::ChainCoeffs{p.c, p.s, p.d, mean, g.spacing(), dt};
}

}  // namespace

DensityGrid DensityGrid::uniform(std::size_t nodes) {
  DensityGrid g{node_positions(nodes), std::vector<double>(nodes, 0.0), 0.0};
  const double h = g.spacing();
  for (double& m : g.mass) m = h;
  g.mass.front() = g.mass.back() = 0.5 * h;
  return g;
}

DensityGrid DensityGrid::point_mass(std::size_t nodes, double y0) {
  if (!(y0 >= 0.0 && y0 <= 1.0)) throw std::invalid_argument("DensityGrid::point_mass: y0 outside [0,1]");
  DensityGrid g{node_positions(nodes), std::vector<double>(nodes, 0.0), 0.0};
  g.mass[static_cast<std::size_t>(std::lround(y0 * static_cast<double>(nodes - 1)))] = 1.0;
  return g;
}

double DensityGrid::mean() const { return simd::dot(x, mass); }

double DensityGrid::total() const { return simd::sum(mass); }

double mkv_max_dt(const DensityGrid& grid, const MkvParams& params) {
  const double rate = simd::mkv_chain_max_rate(grid.x, coeffs(grid, params, grid.mean(), 0.0));
  return rate > 0.0 ? 1.0 / rate : INFINITY;
}

DensityGrid step_mkv_pde(const DensityGrid& grid, const MkvParams& params, double dt) {
  validate(params);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step_mkv_pde: dt must be positive");
  const std::size_t n = grid.size();
  thread_local std::vector<double> stage, second, r, l;
  stage.resize(n);
  second.resize(n);
  r.resize(n);
  l.resize(n);

  auto check = [&](double mean) {
    const auto k = coeffs(grid, params, mean, dt);
    const double rate = simd::mkv_chain_max_rate(grid.x, k);
    if (dt * rate > 1.0) {
      throw CflError("step_mkv_pde: dt = " + std::to_string(dt) + " exceeds the stability bound " +
                         std::to_string(1.0 / rate),
                     1.0 / rate);
    }
    return k;
  };
  const double m0 = grid.mean();
  simd::mkv_chain_apply(grid.x, grid.mass, stage, r, l, check(m0));
  const double m1 = simd::dot(grid.x, stage);
  simd::mkv_chain_apply(grid.x, stage, second, r, l, check(m1));

  DensityGrid out{grid.x, std::vector<double>(n), grid.t + dt};
  for (std::size_t i = 0; i < n; ++i) out.mass[i] = 0.5 * (grid.mass[i] + second[i]);
  return out;
}

MeanCurve run_mkv_to_fixation(DensityGrid grid, const MkvParams& params, double horizon, double dt,
                              double record_dt) {
  validate(params);
  if (!(horizon > 0.0) || !(record_dt > 0.0)) throw std::invalid_argument("run_mkv_to_fixation: invalid times");
  if (dt <= 0.0) dt = 0.9 * mkv_max_dt(grid, params);
  if (!std::isfinite(dt)) dt = record_dt;
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  dt = horizon / static_cast<double>(steps);

  MeanCurve curve;
  const double t0 = grid.t;
  double next_record = t0;
  double mass_mark = grid.total();
  auto record = [&] {
    while (grid.t >= next_record - 1e-12 * std::max(1.0, std::abs(next_record))) {
      curve.t.push_back(grid.t);
      curve.m.push_back(grid.mean());
      next_record += record_dt;
    }
  };
  record();
  for (std::size_t k = 1; k <= steps; ++k) {
    grid = step_mkv_pde(grid, params, dt);
    grid.t = t0 + static_cast<double>(k) * dt;
    if (k % 1000 == 0 || k == steps) {
      const double total = grid.total();
      curve.max_mass_drift_per_1000 = std::max(curve.max_mass_drift_per_1000, std::abs(total - mass_mark));
      mass_mark = total;
    }
    record();
  }
  curve.steps = steps;
  curve.final_grid = std::move(grid);
  return curve;
}

double ColonizationState::size_mass() const {
  double total = 0.0;
  for (std::size_t j = 1; j < usize.size(); ++j) total += usize[j];
  return total;
}

double ColonizationState::nu_norm() const {
  double total = 0.0;
  for (std::size_t j = 1; j < usize.size(); ++j) total += (1.0 + static_cast<double>(j * j)) * usize[j];
  return total;
}

ColonizationRates colonization_rates(const ColonizationState& state, double c) {
  ColonizationRates r;
  for (std::size_t j = 2; j < state.usize.size(); ++j) r.alpha += c * static_cast<double>(j) * state.usize[j];
  r.gamma = state.usize.size() > 1 ? c * state.usize[1] : 0.0;
  return r;
}

double colonization_u_derivative(double u, const ColonizationRates& r) {
  return r.alpha * (1.0 - u) * u - r.gamma * u * u;
}

std::size_t default_jmax(double s, double d) {
  if (!(d > 0.0)) throw std::invalid_argument("default_jmax: requires d > 0");
  return static_cast<std::size_t>(std::ceil(4.0 * (s / d + 10.0)));
}

double colonization_max_rate(const ColonizationState& state, const MkvParams& p) {
  const auto r = colonization_rates(state, p.c);
  const double shift = state.u * (r.alpha + r.gamma);
  const double renorm = std::abs(r.alpha * (1.0 - state.u) - r.gamma * state.u);
  double worst = 0.0;
  for (std::size_t j = 1; j <= state.j_max(); ++j) {
    const double jj = static_cast<double>(j);
    worst = std::max(worst, p.s * jj + 0.5 * p.d * jj * (jj - 1.0) + p.c * jj + p.c * state.u + shift + renorm);
  }
  return worst;
}

namespace {

struct ColonizationDerivative {
  double du = 0.0;
  std::vector<double> dU;
};

ColonizationDerivative colonization_rhs(double u, const std::vector<double>& U, const MkvParams& p) {
  const std::size_t J = U.size() - 1;
  double alpha = 0.0;
  for (std::size_t j = 2; j <= J; ++j) alpha += p.c * static_cast<double>(j) * U[j];
  const double gamma = p.c * U[1];
  const double shift = u * (alpha + gamma);
  const double renorm = alpha * (1.0 - u) - gamma * u;

  ColonizationDerivative out{colonization_u_derivative(u, {alpha, gamma}), std::vector<double>(J + 1, 0.0)};
  for (std::size_t j = 1; j <= J; ++j) {
    const double jj = static_cast<double>(j);
    double g = 0.0;
    if (j > 1) g += p.s * (jj - 1.0) * U[j - 1] + shift * U[j - 1];
    if (j < J) {
      g += (0.5 * p.d * (jj + 1.0) * jj + p.c * (jj + 1.0)) * U[j + 1];
      g -= (p.s * jj + shift) * U[j];
    }
    g -= 0.5 * p.d * jj * (jj - 1.0) * U[j];
    if (j >= 2) g -= p.c * jj * U[j];
    if (j == 1) g += -p.c * u * U[1] + (1.0 - u) * alpha;
    g -= renorm * U[j];
    out.dU[j] = g;
  }
  return out;
}

}  // namespace

ColonizationState step_colonization(const ColonizationState& state, const MkvParams& params, double dt) {
  validate(params);
  if (state.usize.size() < 2) throw std::invalid_argument("step_colonization: empty size distribution");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step_colonization: dt must be positive");
  const std::size_t n = state.usize.size();
  const auto k1 = colonization_rhs(state.u, state.usize, params);
  ColonizationState mid{state.u + dt * k1.du, std::vector<double>(n, 0.0), state.t + dt};
  for (std::size_t j = 1; j < n; ++j) mid.usize[j] = state.usize[j] + dt * k1.dU[j];
  const auto k2 = colonization_rhs(mid.u, mid.usize, params);
  ColonizationState out{state.u + 0.5 * dt * (k1.du + k2.du), std::vector<double>(n, 0.0), state.t + dt};
  for (std::size_t j = 1; j < n; ++j) {
    const double v = state.usize[j] + 0.5 * dt * (k1.dU[j] + k2.dU[j]);
    if (v < -1e-12) {
      throw std::runtime_error("step_colonization: negative size mass at j = " + std::to_string(j) +
                               "; reduce dt below " + std::to_string(1.0 / colonization_max_rate(state, params)));
    }
    out.usize[j] = v;
  }
  if (out.u < -1e-12 || out.u > 1.0 + 1e-12) throw std::runtime_error("step_colonization: u left [0,1]");
  return out;
}

StableSize stable_size_distribution(const MkvParams& params, std::size_t j_max, double tol) {
  validate(params);
  if (j_max == 0) j_max = default_jmax(params.s, params.d);
  ColonizationState st{0.0, std::vector<double>(j_max + 1, 0.0), 0.0};
  st.usize[1] = 1.0;
  const double dt = 0.5 / colonization_max_rate(st, params);
  StableSize out;
  for (std::size_t it = 0; it < 50'000'000; ++it) {
    const ColonizationState next = step_colonization(st, params, dt);
    double change = 0.0;
    for (std::size_t j = 1; j <= j_max; ++j) change = std::max(change, std::abs(next.usize[j] - st.usize[j]));
    st = next;
    if (change / dt < tol) break;
  }
  const auto rhs = colonization_rhs(0.0, st.usize, params);
  for (std::size_t j = 1; j <= j_max; ++j) out.residual = std::max(out.residual, std::abs(rhs.dU[j]));
  const auto r = colonization_rates(st, params.c);
  out.usize = std::move(st.usize);
  out.alpha = r.alpha;
  out.gamma = r.gamma;
  return out;
}

EntranceTrajectory entrance_shoot(const MkvParams& params, const StableSize& stable, const EntranceOptions& o) {
  validate(params);
  if (!(o.A > 0.0)) throw std::invalid_argument("entrance_shoot: A must be positive");
  if (!(o.t_end > o.t_start) || !(o.record_dt > 0.0)) throw std::invalid_argument("entrance_shoot: invalid times");
  EntranceTrajectory out;
  out.alpha = o.alpha > 0.0 ? o.alpha : stable.alpha;
  ColonizationState st{o.A * std::exp(out.alpha * o.t_start), stable.usize, o.t_start};
  if (st.u > 1e-3) out.warnings.push_back("u(t_start) = " + std::to_string(st.u) + " > 1e-3: entrance regime not resolved");
  if (st.u > 1.0) throw std::invalid_argument("entrance_shoot: initial u exceeds 1");
  double dt = o.dt;
  if (dt <= 0.0) {
    ColonizationState full = st;
    full.u = 1.0;
    dt = 0.5 / colonization_max_rate(full, params);
  }
  const auto steps = static_cast<std::size_t>(std::ceil((o.t_end - o.t_start) / dt - 1e-9));
  dt = (o.t_end - o.t_start) / static_cast<double>(steps);
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(o.record_dt / dt)));
  auto record = [&] {
    out.t.push_back(st.t);
    out.u.push_back(st.u);
    out.scaled.push_back(std::exp(-out.alpha * st.t) * st.u);
    out.size_mass.push_back(st.size_mass());
    out.nu_norm.push_back(st.nu_norm());
  };
  record();
  for (std::size_t k = 1; k <= steps; ++k) {
    st = step_colonization(st, params, dt);
    st.t = o.t_start + static_cast<double>(k) * dt;
    if (k % stride == 0 || k == steps) record();
  }
  return out;
}

}  // namespace fwbrw
