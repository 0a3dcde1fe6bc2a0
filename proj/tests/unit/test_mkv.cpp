#include "doctest.h"

#include <cmath>
#include <vector>

#include "fwbrw/mkv.hpp"
#include "fwbrw/particles.hpp"

using namespace fwbrw;

TEST_CASE("density grid construction") {
  const auto u = DensityGrid::uniform(101);
  CHECK(u.total() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(u.mean() == doctest::Approx(0.5).epsilon(1e-14));
  const auto p = DensityGrid::point_mass(11, 0.3);
  CHECK(p.mean() == doctest::Approx(0.3));
  CHECK_THROWS(DensityGrid::uniform(2));
}

TEST_CASE("drift-free equation preserves the mean") {
  auto g = DensityGrid::uniform(101);
  for (std::size_t i = 0; i < g.size(); ++i) g.mass[i] *= 1.0 + 0.5 * g.x[i];
  const double total = g.total();
  for (double& m : g.mass) m /= total;
  const double m0 = g.mean();
  const auto curve = run_mkv_to_fixation(g, {0.0, 0.0, 1.0}, 2.0);
  for (double m : curve.m) CHECK(std::abs(m - m0) < 1e-8);
}

TEST_CASE("mass sitting at 1 stays there") {
  const auto g = DensityGrid::point_mass(51, 1.0);
  const auto curve = run_mkv_to_fixation(g, {0.0, 1.0, 1.0}, 1.0);
  for (double m : curve.m) CHECK(m == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(curve.final_grid.mass.back() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("initial mean 0 stays 0") {
  const auto g = DensityGrid::point_mass(51, 0.0);
  const auto curve = run_mkv_to_fixation(g, {1.0, 1.0, 1.0}, 1.0);
  for (double m : curve.m) CHECK(m == 0.0);
}

TEST_CASE("selection raises the mean monotonically") {
  for (double c : {0.0, 1.0}) {
    const auto curve = run_mkv_to_fixation(DensityGrid::uniform(101), {c, 1.0, 1.0}, 3.0, 0.0, 0.05);
    for (std::size_t i = 1; i < curve.m.size(); ++i) CHECK(curve.m[i] > curve.m[i - 1]);
  }
}

TEST_CASE("pure selection follows the logistic equation") {
  // Upwind spreading perturbs the mean at O(h); a fine mesh keeps it below 1e-4.
  const auto curve = run_mkv_to_fixation(DensityGrid::point_mass(20001, 0.1), {0.0, 1.0, 0.0}, 5.0, 0.0, 0.5);
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    const double e = std::exp(curve.t[i]);
    CHECK(std::abs(curve.m[i] - 0.1 * e / (0.9 + 0.1 * e)) < 1e-4);
  }
}

TEST_CASE("positivity, conservation and the CFL guard") {
  auto g = DensityGrid::uniform(81);
  const MkvParams p{1.0, 2.0, 1.0};
  const double dt = 0.9 * mkv_max_dt(g, p);
  const double m0 = g.total();
  for (int k = 0; k < 1000; ++k) {
    g = step_mkv_pde(g, p, dt);
    for (double v : g.mass) REQUIRE(v >= 0.0);
  }
  CHECK(std::abs(g.total() - m0) < 1e-12);
  try {
    step_mkv_pde(g, p, 10.0 * mkv_max_dt(g, p));
    FAIL("expected a CFL rejection");
  } catch (const CflError& e) {
    CHECK(e.suggested_dt() == doctest::Approx(mkv_max_dt(g, p)).epsilon(1e-6));
  }
}

TEST_CASE("colonization: size mass is conserved") {
  const MkvParams p{1.0, 1.0, 1.0};
  ColonizationState st{0.3, std::vector<double>(45, 0.0), 0.0};
  st.usize[1] = 0.5;
  st.usize[2] = 0.3;
  st.usize[5] = 0.2;
  const double dt = 0.5 / colonization_max_rate(st, p);
  for (int k = 0; k < 20000; ++k) {
    st = step_colonization(st, p, dt);
    REQUIRE(std::abs(st.size_mass() - 1.0) < 1e-8);
  }
  CHECK(st.nu_norm() < 100.0);
}

TEST_CASE("colonization: all sites singly occupied without selection") {
  const MkvParams p{1.0, 0.0, 1.0};
  ColonizationState st{0.0, std::vector<double>(10, 0.0), 0.0};
  st.usize[1] = 1.0;
  const auto r = colonization_rates(st, p.c);
  CHECK(r.alpha == 0.0);
  CHECK(r.gamma == 1.0);
  for (int k = 0; k < 100; ++k) st = step_colonization(st, p, 1e-2);
  CHECK(st.u == 0.0);
}

TEST_CASE("colonization: frozen rates give the logistic solution") {
  const ColonizationRates frozen{1.0, 0.0};
  double u = 0.1;
  const double h = 1e-3;
  for (int k = 0; k < 1000; ++k) {
    const double k1 = colonization_u_derivative(u, frozen);
    const double k2 = colonization_u_derivative(u + 0.5 * h * k1, frozen);
    const double k3 = colonization_u_derivative(u + 0.5 * h * k2, frozen);
    const double k4 = colonization_u_derivative(u + h * k3, frozen);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  CHECK(u == doctest::Approx(0.1 * std::exp(1.0) / (0.9 + 0.1 * std::exp(1.0))).epsilon(1e-10));
  CHECK(u == doctest::Approx(0.23197).epsilon(1e-4));
  CHECK(colonization_u_derivative(0.5, {1.0, 1.0}) == doctest::Approx(0.0));
}

TEST_CASE("stable size distribution and entrance shooting") {
  const MkvParams p{1.0, 1.0, 1.0};
  const auto stable = stable_size_distribution(p);
  CHECK(stable.alpha == doctest::Approx(0.6315710882412).epsilon(1e-6));
  CHECK(stable.gamma == doctest::Approx(0.73524).epsilon(1e-4));
  CHECK(stable.residual < 1e-10);

  EntranceOptions o;
  o.A = 1.0;
  o.t_start = -20.0;
  o.t_end = 15.0;
  o.record_dt = 0.1;
  const auto tr = entrance_shoot(p, stable, o);
  CHECK(tr.warnings.empty());
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    CHECK(std::abs(tr.size_mass[i] - 1.0) < 1e-8);
    if (tr.u[i] < 1e-2) CHECK(std::abs(tr.scaled[i] - 1.0) < 0.1);
  }
  // Saturation level agrees with the equilibrium occupation 1 - pi(0).
  const auto pi = single_site_equilibrium(1.0, 1.0, 1.0, 2.0);
  CHECK(tr.u.back() == doctest::Approx(1.0 - pi.p[0]).epsilon(1e-3));

  o.A = 0.01;
  o.t_start = 0.0;
  const auto late = entrance_shoot(p, stable, o);
  CHECK_FALSE(late.warnings.empty());
}

TEST_CASE("entrance shooting is shift-covariant") {
  const MkvParams p{1.0, 1.0, 1.0};
  const auto stable = stable_size_distribution(p);
  EntranceOptions a;
  a.A = 1.0;
  a.t_start = -25.0;
  a.t_end = 10.0;
  a.dt = 5e-4;
  a.record_dt = 0.5;
  EntranceOptions b = a;
  const double tau = 2.0;
  b.A = std::exp(stable.alpha * tau);
  const auto ta = entrance_shoot(p, stable, a);
  const auto tb = entrance_shoot(p, stable, b);
  // u_b(t) = u_a(t + tau): compare on the shared recording grid.
  const std::size_t shift = 4;
  double sup = 0.0;
  for (std::size_t i = 0; i + shift < ta.u.size(); ++i) sup = std::max(sup, std::abs(tb.u[i] - ta.u[i + shift]));
  CHECK(sup < 1e-3);
}
