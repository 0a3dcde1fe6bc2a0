#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fwbrw/cmj.hpp"
#include "fwbrw/droplet.hpp"
#include "fwbrw/duality.hpp"
#include "fwbrw/fw_meanfield.hpp"
#include "fwbrw/mkv.hpp"
#include "fwbrw/particles.hpp"
#include "fwbrw/runner.hpp"
#include "fwbrw/stats.hpp"

namespace fwbrw::runner {

namespace {

ParamSpec real_param(std::string key, double def, std::string help) {
  return {std::move(key), ValueType::real, def, std::move(help)};
}
ParamSpec int_param(std::string key, std::int64_t def, std::string help) {
  return {std::move(key), ValueType::integer, def, std::move(help)};
}
ParamSpec string_param(std::string key, std::string def, std::string help) {
  return {std::move(key), ValueType::string, std::move(def), std::move(help)};
}

std::vector<ParamSpec> rates(double c = 1.0, double s = 1.0, double d = 1.0) {
  return {real_param("c", c, "migration rate"), real_param("s", s, "selection / branching rate"),
          real_param("d", d, "resampling / pair death rate")};
}

template <class... Extra>
std::vector<ParamSpec> with_rates(Extra&&... extra) {
  auto v = rates();
  (v.push_back(std::forward<Extra>(extra)), ...);
  return v;
}

double resolve_alpha(const RunConfig& cfg, const std::string& key) {
  const double a = cfg.real(key);
  if (a > 0.0) return a;
  return stable_size_distribution({cfg.real("c"), cfg.real("s"), cfg.real("d")}).alpha;
}

std::vector<double> grid(double t_end, double step) {
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor(t_end / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(static_cast<double>(i) * step);
  if (g.back() < t_end - 1e-12) g.push_back(t_end);
  return g;
}

RunResult emergence_scaling(const RunConfig& cfg) {
  const double alpha = resolve_alpha(cfg, "alpha_hat");
  RunResult res;
  res.table.columns = {"N", "log_N", "median_half_takeover", "mean_half_takeover", "censored"};
  std::vector<double> xs, ys;
  const auto Ns = cfg.real_list("N_list");
  for (std::size_t g = 0; g < Ns.size(); ++g) {
    SystemParams p;
    p.N = static_cast<std::size_t>(Ns[g]);
    p.c = cfg.real("c");
    p.s = cfg.real("s");
    p.d = cfg.real("d");
    p.m = cfg.real("m");
    EmergenceOptions o;
    o.alpha_hat = alpha;
    o.t_lo = -2.0;
    o.t_hi = 2.0;
    o.sample_dt = 1.0;
    o.replicas = cfg.replicas;
    o.dt = cfg.real("dt");
    o.takeover_time_cap = std::log(Ns[g]) / alpha + cfg.real("cap_after_shift");
    o.seed = derive_seed(cfg.seed, g);
    const auto er = emergence_experiment(p, o);
    std::vector<double> h;
    double censored = 0.0;
    for (const auto& r : er.replicas) {
      h.push_back(r.half_takeover);
      censored += std::isfinite(r.half_takeover) ? 0.0 : 1.0;
    }
    const double med = stats::median(h);
    double mean = 0.0;
    for (double x : h) mean += x;
    mean /= static_cast<double>(h.size());
    res.table.rows.push_back({Ns[g], std::log(Ns[g]), med, mean, censored});
    xs.push_back(std::log(Ns[g]));
    ys.push_back(med);
  }
  const auto fit = stats::linear_fit(xs, ys);
  res.summary = {{"alpha_hat", alpha},
                 {"slope", fit.slope},
                 {"intercept", fit.intercept},
                 {"r_squared", fit.r_squared},
                 {"inverse_alpha", 1.0 / alpha},
                 {"slope_times_alpha", fit.slope * alpha}};
  return res;
}

RunResult droplet_growth(const RunConfig& cfg) {
  const double alpha = resolve_alpha(cfg, "alpha");
  const auto dc = DropletConfig::make({cfg.real("c"), cfg.real("s"), cfg.real("d"), 0.0}, cfg.real("m"),
                                      cfg.real("eps"), cfg.real("dt"));
  GrowthOptions o;
  o.horizon = cfg.real("horizon");
  o.replicas = cfg.replicas;
  o.record_dt = cfg.real("record_dt");
  o.seed = cfg.seed;
  o.alpha_for_w = alpha;
  const auto g = growth_constant(dc, o);
  RunResult res;
  res.table.columns = {"t", "mean_mass", "mean_atoms", "scaled_mean_mass"};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t k = 0; k < g.times.size(); ++k) {
    const double scaled = g.mean_mass[k] * std::exp(-alpha * g.times[k]);
    res.table.rows.push_back({g.times[k], g.mean_mass[k], g.mean_atoms[k], scaled});
    if (g.times[k] >= 0.5 * o.horizon) {
      lo = std::min(lo, scaled);
      hi = std::max(hi, scaled);
    }
  }
  const auto w = stats::summarize(g.w_samples);
  res.summary = {{"alpha", alpha},          {"alpha_star", g.alpha_star}, {"w_mean", w.mean},
                 {"w_variance", w.variance}, {"w_se", w.se},               {"tail_spread", hi / lo - 1.0}};
  return res;
}

RunResult cmj_alpha(const RunConfig& cfg) {
  const double c = cfg.real("c"), s = cfg.real("s"), d = cfg.real("d");
  const double T = cfg.real("horizon");
  const auto mu_grid = grid(cfg.real("mu_horizon"), 0.01);
  const auto mu = estimate_mu(c, s, d, mu_grid, static_cast<std::size_t>(cfg.integer("mu_replicas")),
                              derive_seed(cfg.seed, 1));
  const auto lap = malthusian_alpha(mu, std::max(s, 1e-3) * 2.0 + c);

  CollisionFreeOptions o;
  o.times = grid(T, 0.25);
  o.snapshot_times = {T};
  o.replicas = cfg.replicas;
  o.seed = derive_seed(cfg.seed, 2);
  const auto ens = simulate_collision_free(c, s, d, o);
  const auto fit = growth_rate_fit(ens.times, ens.occupied);
  const auto hist = cmj_rates(ens.snapshots.front(), c);
  const double stable = stable_size_distribution({c, s, d}).alpha;

  RunResult res;
  res.table.columns = {"t", "mean_occupied", "mean_total"};
  for (std::size_t k = 0; k < ens.times.size(); ++k) {
    double occ = 0.0, tot = 0.0;
    for (std::size_t r = 0; r < ens.occupied.size(); ++r) {
      occ += ens.occupied[r][k];
      tot += ens.totals[r][k];
    }
    const auto n = static_cast<double>(ens.occupied.size());
    res.table.rows.push_back({ens.times[k], occ / n, tot / n});
  }
  const auto w = stats::summarize(fit.w_samples);
  res.summary = {{"alpha_laplace", lap.alpha},  {"laplace_bracketed", lap.bracketed ? 1.0 : 0.0},
                 {"alpha_regression", fit.alpha_reg}, {"alpha_histogram", hist.alpha},
                 {"alpha_stable_size", stable}, {"gamma", hist.gamma},
                 {"B", hist.B},                 {"w_mean", w.mean},
                 {"w_variance", w.variance}};
  return res;
}

RunResult duality_moment(const RunConfig& cfg) {
  MomentDualityOptions o;
  o.replicas = cfg.replicas;
  o.dt = cfg.real("dt");
  o.seed = cfg.seed;
  std::vector<std::size_t> ks;
  for (double k : cfg.real_list("k_list")) ks.push_back(static_cast<std::size_t>(k));
  const auto reports = check_moment_duality(cfg.real("x0"), cfg.real("d"), ks, cfg.real("t"), o);
  RunResult res;
  res.table.columns = {"k", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "z_score", "pass"};
  double worst = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto& r = reports[i];
    res.table.rows.push_back({static_cast<double>(ks[i]), r.lhs_mean, r.lhs_se, r.rhs_mean, r.rhs_se, r.z_score,
                              r.pass ? 1.0 : 0.0});
    worst = std::max(worst, std::abs(r.z_score));
  }
  res.summary = {{"max_abs_z", worst}};
  return res;
}

RunResult duality_spatial(const RunConfig& cfg) {
  SystemParams p;
  p.N = static_cast<std::size_t>(cfg.integer("N"));
  p.c = cfg.real("c");
  p.s = cfg.real("s");
  p.d = cfg.real("d");
  p.m = cfg.real("m");
  SpatialDualityOptions o;
  o.replicas = cfg.replicas;
  o.dt = cfg.real("dt");
  o.seed = cfg.seed;
  const auto r = check_spatial_duality(p, cfg.real("t"), o);
  RunResult res;
  res.table.columns = {"lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "z_score", "pass"};
  res.table.rows.push_back({r.lhs_mean, r.lhs_se, r.rhs_mean, r.rhs_se, r.z_score, r.pass ? 1.0 : 0.0});
  res.summary = {{"z_score", r.z_score}};
  return res;
}

RunResult mkv_fixation(const RunConfig& cfg) {
  const auto nodes = static_cast<std::size_t>(cfg.integer("nodes"));
  const double y0 = cfg.real("y0");
  DensityGrid g = y0 < 0.0 ? DensityGrid::uniform(nodes) : DensityGrid::point_mass(nodes, y0);
  const auto curve = run_mkv_to_fixation(std::move(g), {cfg.real("c"), cfg.real("s"), cfg.real("d")},
                                         cfg.real("horizon"), cfg.real("dt"), cfg.real("record_dt"));
  RunResult res;
  res.table.columns = {"t", "mean"};
  for (std::size_t k = 0; k < curve.t.size(); ++k) res.table.rows.push_back({curve.t[k], curve.m[k]});
  res.summary = {{"final_mean", curve.m.back()},
                 {"max_mass_drift_per_1000_steps", curve.max_mass_drift_per_1000},
                 {"steps", static_cast<double>(curve.steps)}};
  return res;
}

RunResult colonization(const RunConfig& cfg) {
  const MkvParams p{cfg.real("c"), cfg.real("s"), cfg.real("d")};
  const auto stable = stable_size_distribution(p);
  EntranceOptions o;
  o.A = cfg.real("A");
  o.t_start = cfg.real("t_start");
  o.t_end = cfg.real("t_end");
  o.record_dt = cfg.real("record_dt");
  const auto tr = entrance_shoot(p, stable, o);
  RunResult res;
  res.table.columns = {"t", "u", "scaled_u", "size_mass", "nu_norm"};
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    res.table.rows.push_back({tr.t[k], tr.u[k], tr.scaled[k], tr.size_mass[k], tr.nu_norm[k]});
  }
  res.summary = {{"alpha", stable.alpha},
                 {"gamma", stable.gamma},
                 {"u_final", tr.u.back()},
                 {"warnings", static_cast<double>(tr.warnings.size())}};
  return res;
}

RunResult intensity_fixed_point(const RunConfig& cfg) {
  const double c = cfg.real("c"), s = cfg.real("s"), d = cfg.real("d");
  const auto fp = self_consistent_intensity(c, s, d);
  const ParticleParams p{c, s, d, static_cast<std::size_t>(cfg.integer("N")), 0.0};
  const double T = cfg.real("horizon");
  const auto t_grid = grid(T, cfg.real("record_dt"));
  const auto paths = intensity_trajectory(p, t_grid, cfg.replicas, cfg.seed);
  RunResult res;
  res.table.columns = {"t", "mean_intensity"};
  double tail = 0.0;
  std::size_t tail_n = 0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    double m = 0.0;
    for (const auto& path : paths) m += path[k];
    m /= static_cast<double>(paths.size());
    res.table.rows.push_back({t_grid[k], m});
    if (t_grid[k] >= 0.5 * T) {
      tail += m;
      ++tail_n;
    }
  }
  tail /= static_cast<double>(std::max<std::size_t>(tail_n, 1));
  res.summary = {{"iota_star", fp.iota_star},
                 {"converged", fp.converged ? 1.0 : 0.0},
                 {"simulated_tail_intensity", tail},
                 {"relative_error", std::abs(tail - fp.iota_star) / fp.iota_star}};
  return res;
}

RunResult single_site_timescale_run(const RunConfig& cfg) {
  const auto Ls = cfg.real_list("L_list");
  const auto r = single_site_timescale(cfg.real("s"), cfg.real("d"), Ls, cfg.replicas, cfg.seed, cfg.real("m"));
  RunResult res;
  res.table.columns = {"L", "median_time"};
  for (std::size_t i = 0; i < r.L.size(); ++i) res.table.rows.push_back({r.L[i], r.medians[i]});
  res.summary = {{"slope", r.slope},
                 {"intercept", r.intercept},
                 {"r_squared", r.r_squared},
                 {"log_scale", r.log_scale ? 1.0 : 0.0}};
  return res;
}

struct Entry {
  ExperimentInfo info;
  RunResult (*fn)(const RunConfig&);
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = {
      {{"emergence_scaling", "median half-takeover time of the mean-field system against log N", 20,
        with_rates(real_param("m", 1.0, "mutation rate"), string_param("N_list", "64,128,256", "system sizes"),
                   real_param("dt", 5e-3, "time step"), real_param("alpha_hat", 0.0, "growth rate (0: computed)"),
                   real_param("cap_after_shift", 30.0, "simulation cap beyond log N / alpha"))},
       emergence_scaling},
      {{"droplet_growth", "growth of the eps-droplet total mass", 200,
        with_rates(real_param("m", 1.0, "mutation rate"), real_param("eps", 1e-2, "excursion threshold"),
                   real_param("dt", 1e-2, "time step"), real_param("horizon", 8.0, "final time"),
                   real_param("record_dt", 0.25, "sampling interval"),
                   real_param("alpha", 0.0, "rescaling rate (0: computed)"))},
       droplet_growth},
      {{"cmj_alpha", "Malthusian rate of the collision-free process by three estimators", 400,
        with_rates(real_param("horizon", 12.0, "final time of the branching simulation"),
                   real_param("mu_horizon", 30.0, "grid length for the birth intensity"),
                   int_param("mu_replicas", 20000, "paths for the birth intensity"))},
       cmj_alpha},
      {{"duality_moment", "moments of the neutral diffusion against the pure-death dual", 100000,
        {real_param("x0", 0.3, "initial frequency"), real_param("d", 1.0, "resampling rate"),
         string_param("k_list", "1,2,3", "moment orders"), real_param("t", 0.5, "time"),
         real_param("dt", 1e-3, "time step")}},
       duality_moment},
      {{"duality_spatial", "mean type-1 frequency against the particle-system hazard", 10000,
        with_rates(int_param("N", 10, "sites"), real_param("m", 1.0, "mutation rate"), real_param("t", 1.0, "time"),
                   real_param("dt", 1e-3, "time step"))},
       duality_spatial},
      {{"mkv_fixation", "mean curve of the McKean-Vlasov density equation", 1,
        with_rates(int_param("nodes", 201, "grid nodes"), real_param("y0", -1.0, "point-mass start (<0: uniform)"),
                   real_param("horizon", 20.0, "final time"), real_param("dt", 0.0, "time step (0: automatic)"),
                   real_param("record_dt", 0.1, "sampling interval"))},
       mkv_fixation},
      {{"colonization", "entrance solution of the colonization system", 1,
        with_rates(real_param("A", 1.0, "entrance amplitude"), real_param("t_start", -20.0, "start time"),
                   real_param("t_end", 10.0, "final time"), real_param("record_dt", 0.1, "sampling interval"))},
       colonization},
      {{"intensity_fixed_point", "self-consistent intensity against the finite particle system", 10,
        with_rates(int_param("N", 200, "sites"), real_param("horizon", 50.0, "final time"),
                   real_param("record_dt", 1.0, "sampling interval"))},
       intensity_fixed_point},
      {{"single_site_timescale", "median first-mutation time of the one-site dual against L", 1000,
        {real_param("s", 1.0, "branching rate"), real_param("d", 0.0, "pair death rate"),
         real_param("m", 1.0, "mutation rate"), string_param("L_list", "100,1000,10000", "mutation denominators")}},
       single_site_timescale_run},
  };
  return e;
}

}  // namespace

const std::vector<ExperimentInfo>& registry() {
  static const std::vector<ExperimentInfo> infos = [] {
    std::vector<ExperimentInfo> v;
    for (const auto& e : entries()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

const ExperimentInfo* find_experiment(std::string_view name) {
  if (name == "moment_duality") name = "duality_moment";
  if (name == "spatial_duality") name = "duality_spatial";
  for (const auto& info : registry()) {
    if (info.name == name) return &info;
  }
  return nullptr;
}

RunResult run_experiment(const RunConfig& config) {
  const ExperimentInfo* info = find_experiment(config.experiment);
  if (!info) {
    std::string names;
    for (const auto& e : registry()) names += (names.empty() ? "" : ", ") + e.name;
    throw std::invalid_argument("unknown experiment '" + config.experiment + "'; registered: " + names);
  }
  for (const auto& e : entries()) {
    if (e.info.name == info->name) return e.fn(config);
  }
  return {};
}

}  // namespace fwbrw::runner
