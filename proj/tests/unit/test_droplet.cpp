#include "doctest.h"

#include <cmath>
#include <vector>

#include "fwbrw/droplet.hpp"
#include "fwbrw/stats.hpp"

using namespace fwbrw;

namespace {
const DiffusionParams kUnit{1.0, 1.0, 1.0, 0.0};
}

TEST_CASE("no immigration and no mass stays empty") {
  const auto cfg = DropletConfig::make(kUnit, 0.0, 1e-2, 1e-2);
  DropletState st;
  Rng rng = make_rng(1);
  for (int i = 0; i < 1000; ++i) step_droplet(st, cfg, rng);
  CHECK(st.active.empty());
  CHECK(st.total_mass == 0.0);
}

TEST_CASE("spawn intensity") {
  const auto cfg = DropletConfig::make(kUnit, 2.0, 1e-2, 1e-2);
  CHECK(cfg.spawn_intensity(0.0) == doctest::Approx(2.0 / scale_function(kUnit, 1e-2)));
  CHECK(cfg.spawn_intensity(1.0) > cfg.spawn_intensity(0.5));
  CHECK_THROWS(DropletConfig::make(kUnit, 1.0, 1.0, 1e-2));
  CHECK_THROWS(DropletConfig::make(kUnit, -1.0, 0.1, 1e-2));
}

TEST_CASE("state invariants along a run") {
  const auto cfg = DropletConfig::make(kUnit, 1.0, 1e-2, 1e-2);
  DropletState st;
  Rng rng = make_rng(2);
  for (int i = 0; i < 500; ++i) {
    const double before = st.total_mass;
    DropletStepStats stats;
    step_droplet(st, cfg, rng, &stats);
    double total = 0.0;
    for (const auto& a : st.active) {
      CHECK(a.mass > 0.0);
      CHECK((a.label >= 0.0 && a.label < 1.0));
      total += a.mass;
    }
    CHECK(st.total_mass == doctest::Approx(total).epsilon(1e-12));
    CHECK(std::isfinite(before));
  }
  CHECK(st.t == doctest::Approx(5.0));
}

TEST_CASE("freshly spawned atoms start at eps") {
  const auto cfg = DropletConfig::make(kUnit, 50.0, 1e-2, 1e-3);
  DropletState st;
  Rng rng = make_rng(3);
  step_droplet(st, cfg, rng);
  REQUIRE(!st.active.empty());
  for (const auto& a : st.active) CHECK(a.mass == 1e-2);
}

TEST_CASE("expected mass under pure immigration") {
  // With c = 0 the spawn rate is m / S(eps) and each excursion's mean mass
  // solves y' = s y (1 - y) only through its law; for s = 0 it is a martingale
  // so E[mass(t)] = m t eps / S(eps) = m t (S(x) = x when s = c = 0).
  const DiffusionParams p{0.0, 0.0, 1.0, 0.0};
  const auto cfg = DropletConfig::make(p, 2.0, 1e-2, 1e-2);
  stats::Accumulator acc;
  for (int r = 0; r < 400; ++r) {
    Rng rng = make_rng(4, r);
    DropletState st;
    for (int i = 0; i < 100; ++i) step_droplet(st, cfg, rng);
    acc.add(st.total_mass);
  }
  CHECK(std::abs(acc.mean() - 2.0) < 4.0 * acc.se());
}

TEST_CASE("branching property: immigration split into independent parts") {
  // Sum of runs with m1 and m2 has the law of a run with m1 + m2; compared
  // through means and variances at a fixed time.
  const double m1 = 0.4, m2 = 0.6, eps = 2e-2, dt = 1e-2;
  const auto c1 = DropletConfig::make(kUnit, m1, eps, dt);
  const auto c2 = DropletConfig::make(kUnit, m2, eps, dt);
  const auto c12 = DropletConfig::make(kUnit, m1 + m2, eps, dt);
  const int reps = 1500, steps = 200;
  stats::Accumulator merged, joint;
  for (int r = 0; r < reps; ++r) {
    Rng ra = make_rng(5, 3 * r), rb = make_rng(5, 3 * r + 1), rc = make_rng(5, 3 * r + 2);
    DropletState a, b, c;
    for (int i = 0; i < steps; ++i) {
      step_droplet(a, c1, ra);
      step_droplet(b, c2, rb);
      step_droplet(c, c12, rc);
    }
    merged.add(a.total_mass + b.total_mass);
    joint.add(c.total_mass);
  }
  CHECK(std::abs(stats::z_score(merged.mean(), merged.se(), joint.mean(), joint.se())) < 3.5);
  CHECK(merged.variance() == doctest::Approx(joint.variance()).epsilon(0.2));
}

TEST_CASE("growth constant lies in (0, s) with random limit") {
  const auto cfg = DropletConfig::make(kUnit, 1.0, 2e-2, 1e-2);
  GrowthOptions opt;
  opt.horizon = 6.0;
  opt.replicas = 60;
  opt.seed = 6;
  const auto res = growth_constant(cfg, opt);
  CHECK(!res.degenerate);
  CHECK(res.alpha_star > 0.0);
  CHECK(res.alpha_star < 1.0);
  CHECK(stats::summarize(res.w_samples).variance > 0.0);
  CHECK(res.mean_mass.front() == 0.0);
  CHECK_THROWS(growth_constant(DropletConfig::make(kUnit, 0.0, 2e-2, 1e-2), opt));
}
