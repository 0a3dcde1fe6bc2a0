#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fwbrw/fw_meanfield.hpp"
#include "fwbrw/stats.hpp"

using namespace fwbrw;

TEST_CASE("absorbing configurations") {
  for (auto scheme : {StepScheme::euler_clamp, StepScheme::cir_frozen}) {
    SystemParams p{20, 1.0, 1.0, 1.0, 0.0, 0.0, scheme};
    Rng rng = make_rng(1);
    FrequencyState ones = FrequencyState::all_type1(20);
    for (int i = 0; i < 200; ++i) ones = step_system(std::move(ones), p, 1e-2, rng);
    CHECK(std::all_of(ones.x1.begin(), ones.x1.end(), [](double x) { return x == 1.0; }));
    p.m = 2.0;
    FrequencyState zeros{std::vector<double>(20, 0.0), 0.0};
    for (int i = 0; i < 200; ++i) zeros = step_system(std::move(zeros), p, 1e-2, rng);
    CHECK(std::all_of(zeros.x1.begin(), zeros.x1.end(), [](double x) { return x == 0.0; }));
  }
}

TEST_CASE("states stay in the unit interval") {
  for (auto scheme : {StepScheme::euler_clamp, StepScheme::cir_frozen}) {
    SystemParams p{50, 1.0, 2.0, 1.0, 1.0, 0.0, scheme};
    Rng rng = make_rng(2);
    FrequencyState st{std::vector<double>(50), 0.0};
    for (std::size_t i = 0; i < 50; ++i) st.x1[i] = static_cast<double>(i) / 49.0;
    for (int k = 0; k < 500; ++k) {
      st = step_system(std::move(st), p, 5e-3, rng);
      for (double x : st.x1) REQUIRE((x >= 0.0 && x <= 1.0));
    }
  }
}

TEST_CASE("step_system rejects bad input") {
  SystemParams p{2, 1.0, 1.0, 1.0, 0.0};
  Rng rng = make_rng(3);
  CHECK_THROWS(step_system(FrequencyState{{0.5, std::nan("")}, 0.0}, p, 1e-3, rng));
  CHECK_THROWS(step_system(FrequencyState{{0.5, 0.5}, 0.0}, p, 0.0, rng));
}

TEST_CASE("empirical means") {
  const FrequencyState ones = FrequencyState::all_type1(4);
  CHECK(empirical_mean(ones, TypeIndex::one) == 1.0);
  CHECK(empirical_mean(ones, TypeIndex::two) == 0.0);
  CHECK(empirical_mean(FrequencyState{{0.2, 0.6}, 0.0}, TypeIndex::two) == doctest::Approx(0.6));
}

TEST_CASE("droplet measure") {
  Rng rng = make_rng(4);
  CHECK(droplet_measure(FrequencyState::all_type1(3), draw_labels(3, rng)).atoms.empty());
  const auto one = droplet_measure(FrequencyState{{0.7}, 0.0}, std::vector<double>{0.25});
  REQUIRE(one.atoms.size() == 1);
  CHECK(one.atoms[0].mass == doctest::Approx(0.3));
  CHECK(one.atoms[0].label == 0.25);
  for (int trial = 0; trial < 20; ++trial) {
    FrequencyState st{std::vector<double>(30), 0.0};
    for (double& x : st.x1) x = uniform01(rng);
    const auto mu = droplet_measure(st, draw_labels(30, rng));
    CHECK(mu.total_mass() == doctest::Approx(30.0 * empirical_mean(st, TypeIndex::two)).epsilon(1e-12));
  }
}

TEST_CASE("empirical distribution") {
  const auto zeros = empirical_distribution(FrequencyState{std::vector<double>(10, 0.0), 0.0});
  CHECK(zeros.bins.back() == doctest::Approx(1.0));
  const auto ones = empirical_distribution(FrequencyState::all_type1(10));
  CHECK(ones.bins.front() == doctest::Approx(1.0));
  const auto half = empirical_distribution(FrequencyState{{0.0, 1.0, 0.0, 1.0}, 0.0}, 10);
  CHECK(half.bins.front() == doctest::Approx(0.5));
  CHECK(half.bins.back() == doctest::Approx(0.5));
  double total = 0.0;
  for (double b : half.bins) total += b;
  CHECK(total == doctest::Approx(1.0));
  CHECK_THROWS(empirical_distribution(FrequencyState::all_type1(10), 1));
}

TEST_CASE("one-site system reduces to the single-site diffusion") {
  // With N = 1 the migration term vanishes. Compare time-1 marginals of the
  // system against the single-site stepper via a two-sample KS statistic.
  const double dt = 1e-2, t_end = 1.0;
  const int paths = 10000;
  SystemParams sys{1, 3.0, 1.0, 1.0, 0.0, 0.0, StepScheme::euler_clamp};
  std::vector<double> a, b;
  Rng ra = make_rng(10), rb = make_rng(11);
  for (int i = 0; i < paths; ++i) {
    FrequencyState st{{0.6}, 0.0};
    double y = 0.4;  // type-2 frequency of the same start
    for (int k = 0; k < static_cast<int>(t_end / dt); ++k) {
      st = step_system(std::move(st), sys, dt, ra);
      y = step_fw(y, DiffusionParams{0.0, 1.0, 1.0, 0.0}, dt, standard_normal(rb));
    }
    a.push_back(1.0 - st.x1[0]);
    b.push_back(y);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    ks = std::max(ks, std::abs(static_cast<double>(i) - static_cast<double>(j)) / paths);
  }
  // 1% critical value of the two-sample KS test.
  CHECK(ks < 1.628 * std::sqrt(2.0 / paths));
}

TEST_CASE("type closure: mirrored system with exchanged roles") {
  // Stepping x1 with selection against type 1 equals stepping x2 = 1 - x1
  // with selection for it and negated noise.
  SystemParams p{8, 1.0, 1.5, 1.0, 0.0, 0.0, StepScheme::euler_clamp};
  Rng rng = make_rng(20);
  FrequencyState st{std::vector<double>(8), 0.0};
  for (double& x : st.x1) x = 0.2 + 0.6 * uniform01(rng);
  std::vector<double> x2(8);
  for (std::size_t i = 0; i < 8; ++i) x2[i] = 1.0 - st.x1[i];
  Rng r1 = make_rng(21), r2 = make_rng(21);
  const double dt = 1e-3;
  st = step_system(std::move(st), p, dt, r1);
  double mean2 = 0.0;
  for (double v : x2) mean2 += v / 8.0;
  for (std::size_t i = 0; i < 8; ++i) {
    const double z = standard_normal(r2);
    const double y = x2[i];
    const double next = y + (p.c * (mean2 - y) + p.s * y * (1.0 - y)) * dt + std::sqrt(p.d * y * (1.0 - y) * dt) * (-z);
    CHECK(1.0 - st.x1[i] == doctest::Approx(next).epsilon(1e-12));
  }
}

TEST_CASE("emergence experiment") {
  SUBCASE("no mutation keeps the system pure") {
    SystemParams p{16, 1.0, 1.0, 1.0, 0.0};
    EmergenceOptions opt;
    opt.alpha_hat = 0.63;
    opt.replicas = 2;
    opt.dt = 1e-2;
    const auto res = emergence_experiment(p, opt);
    for (const auto& rep : res.replicas) {
      for (double v : rep.mean_type2) CHECK(v == 0.0);
      CHECK(std::isinf(rep.half_takeover));
    }
    CHECK(res.abs_times.front() == 0.0);  // window truncated at 0
  }
  SUBCASE("more mutation pulls takeover earlier on coupled seeds") {
    std::vector<double> slow, fast;
    for (double m : {0.5, 4.0}) {
      SystemParams p{16, 1.0, 2.0, 1.0, m};
      EmergenceOptions opt;
      opt.alpha_hat = 1.0;
      opt.replicas = 20;
      opt.dt = 1e-2;
      opt.takeover_time_cap = 200.0;
      opt.seed = 99;
      const auto res = emergence_experiment(p, opt);
      auto& out = m < 1.0 ? slow : fast;
      for (const auto& rep : res.replicas) out.push_back(rep.half_takeover);
    }
    for (double v : slow) CHECK(std::isfinite(v));
    CHECK(stats::median(fast) < stats::median(slow));
  }
}
