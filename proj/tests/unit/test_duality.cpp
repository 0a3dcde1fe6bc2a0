#include "doctest.h"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <vector>

#include "fwbrw/duality.hpp"
#include "fwbrw/stats.hpp"

using namespace fwbrw;

namespace {

// Row k of exp(tQ) for the death chain generator on {1..k}.
std::vector<double> death_law_oracle(int k, double d, double t) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(k + 1, k + 1);
  for (int n = 2; n <= k; ++n) {
    const double rate = 0.5 * d * n * (n - 1);
    Q(n, n - 1) = rate;
    Q(n, n) = -rate;
  }
  const Eigen::MatrixXd P = (t * Q).exp();
  std::vector<double> row(k + 1);
  for (int j = 0; j <= k; ++j) row[j] = P(k, j);
  return row;
}

}  // namespace

TEST_CASE("death chain law matches the matrix exponential") {
  for (int k : {1, 2, 3, 5, 8}) {
    for (double t : {0.1, 0.5, 2.0}) {
      const auto law = death_chain_law(static_cast<std::size_t>(k), 1.3, t);
      const auto oracle = death_law_oracle(k, 1.3, t);
      for (int j = 0; j <= k; ++j) CHECK(law[j] == doctest::Approx(oracle[j]).epsilon(1e-9));
    }
  }
  const auto p0 = death_chain_law(4, 1.0, 0.0);
  CHECK(p0[4] == 1.0);
}

TEST_CASE("closed-form dual moments") {
  Rng rng = make_rng(1);
  CHECK(death_chain_moment(0.3, 1.0, 2, 0.5, 1, rng).mean == doctest::Approx(0.172628561460346974).epsilon(1e-13));
  CHECK(death_chain_moment(0.3, 1.0, 3, 0.5, 1, rng).mean == doctest::Approx(0.118314308916754519).epsilon(1e-13));
  CHECK(death_chain_moment(0.3, 1.0, 1, 0.5, 1, rng).mean == doctest::Approx(0.3));
  CHECK(death_chain_moment(0.3, 1.0, 3, 0.0, 1, rng).mean == doctest::Approx(0.027));
}

TEST_CASE("Monte Carlo dual moment for k > 3") {
  Rng rng = make_rng(2);
  const auto mc = death_chain_moment(0.6, 1.0, 6, 0.4, 40000, rng);
  const auto law = death_chain_law(6, 1.0, 0.4);
  double exact = 0.0;
  for (int j = 1; j <= 6; ++j) exact += law[j] * std::pow(0.6, j);
  CHECK(mc.se > 0.0);
  CHECK(std::abs(mc.mean - exact) < 4.0 * mc.se);
}

TEST_CASE("moment duality") {
  MomentDualityOptions o;
  o.replicas = 20000;
  o.dt = 5e-3;
  o.seed = 3;
  SUBCASE("k = 2 reference cell") {
    const auto r = check_moment_duality(0.3, 1.0, 2, 0.5, o);
    CHECK(r.rhs_se == 0.0);
    CHECK(r.lhs_se > 0.0);
    CHECK(r.pass);
  }
  SUBCASE("k = 1 is the martingale") {
    const auto r = check_moment_duality(0.7, 2.0, 1, 1.0, o);
    CHECK(r.rhs_mean == doctest::Approx(0.7));
    CHECK(r.pass);
  }
  SUBCASE("t = 0") {
    const auto r = check_moment_duality(0.4, 1.0, 3, 0.0, o);
    CHECK(r.lhs_mean == doctest::Approx(0.064));
    CHECK(r.rhs_mean == doctest::Approx(0.064));
  }
  SUBCASE("path reuse across k") {
    const std::size_t ks[] = {1, 2, 4};
    const auto rs = check_moment_duality(0.5, 1.0, ks, 0.3, o);
    REQUIRE(rs.size() == 3);
    for (const auto& r : rs) CHECK(std::abs(r.z_score) < 4.0);
    CHECK(rs[2].rhs_se > 0.0);
  }
  CHECK_THROWS(check_moment_duality(0.3, 0.0, 2, 0.5, o));
  CHECK_THROWS(check_moment_duality(0.3, 1.0, 0, 0.5, o));
}

TEST_CASE("dual occupation") {
  Rng rng = make_rng(4);
  SUBCASE("t = 0") {
    const auto p = dual_occupation({1.0, 1.0, 1.0, 10, 0.0}, 0.0, rng);
    CHECK(p.counts.front() == 1.0);
    CHECK(p.integral == 0.0);
  }
  SUBCASE("pure migration keeps one particle") {
    const auto p = dual_occupation({2.0, 0.0, 0.0, 10, 0.0}, 3.0, rng);
    CHECK(p.integral == doctest::Approx(3.0));
    CHECK(p.counts.size() == 1);
  }
  SUBCASE("integrated Yule mean") {
    const double s = 1.0, t = 1.5;
    stats::Accumulator acc;
    for (int r = 0; r < 20000; ++r) acc.add(dual_occupation({1.0, s, 0.0, 50, 0.0}, t, rng).integral);
    const double exact = std::expm1(s * t) / s;
    CHECK(std::abs(acc.mean() - exact) < 4.0 * acc.se());
  }
  SUBCASE("integral matches the recorded path") {
    const auto p = dual_occupation({1.0, 1.0, 1.0, 5, 0.0}, 2.0, rng);
    double integral = 0.0;
    for (std::size_t i = 0; i < p.times.size(); ++i) {
      const double end = i + 1 < p.times.size() ? p.times[i + 1] : 2.0;
      integral += p.counts[i] * (end - p.times[i]);
    }
    CHECK(p.integral == doctest::Approx(integral).epsilon(1e-12));
  }
}

TEST_CASE("spatial duality") {
  SystemParams p;
  p.N = 5;
  p.c = p.s = p.d = p.m = 1.0;
  SpatialDualityOptions o;
  o.replicas = 4000;
  o.dt = 5e-3;
  o.seed = 5;
  SUBCASE("identity at N = 5") {
    const auto r = check_spatial_duality(p, 0.5, o);
    CHECK(r.lhs_se > 0.0);
    CHECK(r.rhs_se > 0.0);
    CHECK(r.pass);
  }
  SUBCASE("no mutation") {
    p.m = 0.0;
    const auto r = check_spatial_duality(p, 0.5, o);
    CHECK(r.lhs_mean == 1.0);
    CHECK(r.rhs_mean == 1.0);
    CHECK(r.pass);
  }
  SUBCASE("hazard monotone in m on coupled seeds") {
    o.replicas = 500;
    double prev = 2.0;
    for (double m : {0.25, 1.0, 4.0}) {
      p.m = m;
      const double rhs = check_spatial_duality(p, 0.5, o).rhs_mean;
      CHECK(rhs <= prev);
      prev = rhs;
    }
  }
}

TEST_CASE("single-site time scales") {
  const std::vector<double> Ls = {100.0, 1000.0, 10000.0};
  SUBCASE("d = 0 grows like log L / s") {
    const auto r = single_site_timescale(2.0, 0.0, Ls, 2000, 6);
    CHECK(r.log_scale);
    CHECK(r.slope == doctest::Approx(0.5).epsilon(0.2));
  }
  SUBCASE("d > 0 grows linearly in L") {
    const auto r = single_site_timescale(1.0, 1.0, Ls, 400, 7);
    CHECK_FALSE(r.log_scale);
    CHECK(r.r_squared > 0.95);
    CHECK(r.slope > 0.0);
  }
  CHECK_THROWS(single_site_timescale(0.0, 0.0, Ls, 10, 1));
}
