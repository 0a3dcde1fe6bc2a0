#include "doctest.h"

#include <cmath>
#include <vector>

#include "fwbrw/rng.hpp"
#include "fwbrw/simd/kernels.hpp"

using namespace fwbrw;

namespace {

std::vector<double> random_unit(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform01(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar and avx2 Euler kernels agree") {
  if (!simd::isa_supported(simd::Isa::avx2)) return;
  Rng rng = make_rng(1);
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
    auto x = random_unit(n, rng);
    x[0] = 0.0;
    if (n > 2) x[2] = 1.0;
    std::vector<double> z(n);
    for (double& v : z) v = 3.0 * standard_normal(rng);
    const simd::EulerCoeffs k{1.0, 0.4, -1.0, 0.0, 0.01, 1.0, 0.05};
    auto xs = x, xa = x;
    const auto cs = simd::scalar::fw_euler_step(xs, z, k);
    const auto ca = simd::avx2::fw_euler_step(xa, z, k);
    CHECK(cs == ca);
    for (std::size_t i = 0; i < n; ++i) CHECK(xa[i] == doctest::Approx(xs[i]).epsilon(1e-14));
  }
}

TEST_CASE("scalar and avx2 chain kernels agree") {
  if (!simd::isa_supported(simd::Isa::avx2)) return;
  Rng rng = make_rng(2);
  for (std::size_t n : {2u, 3u, 5u, 9u, 101u, 402u}) {
    std::vector<double> x(n);
    const double h = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) * h;
    auto p = random_unit(n, rng);
    const simd::ChainCoeffs k{1.0, 1.0, 1.0, 0.3, h, 1e-6};
    std::vector<double> os(n), oa(n), rs(n), ls(n), ra(n), la(n);
    simd::scalar::mkv_chain_apply(x, p, os, rs, ls, k);
    simd::avx2::mkv_chain_apply(x, p, oa, ra, la, k);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(oa[i] == doctest::Approx(os[i]).epsilon(1e-13));
      CHECK(ra[i] == doctest::Approx(rs[i]).epsilon(1e-13));
      CHECK(la[i] == doctest::Approx(ls[i]).epsilon(1e-13));
    }
    CHECK(simd::avx2::mkv_chain_max_rate(x, k) == doctest::Approx(simd::scalar::mkv_chain_max_rate(x, k)));
  }
}

TEST_CASE("scalar and avx2 reductions agree") {
  if (!simd::isa_supported(simd::Isa::avx2)) return;
  Rng rng = make_rng(3);
  for (std::size_t n : {0u, 1u, 5u, 8u, 13u, 1000u}) {
    auto a = random_unit(n, rng), b = random_unit(n, rng);
    CHECK(simd::avx2::sum(a) == doctest::Approx(simd::scalar::sum(a)).epsilon(1e-13));
    CHECK(simd::avx2::dot(a, b) == doctest::Approx(simd::scalar::dot(a, b)).epsilon(1e-13));
  }
}

TEST_CASE("chain step conserves mass and keeps positivity") {
  const std::size_t n = 51;
  const double h = 1.0 / 50.0;
  std::vector<double> x(n), p(n, 1.0 / n), out(n), r(n), l(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) * h;
  simd::ChainCoeffs k{1.0, 1.0, 1.0, 0.5, h, 0.0};
  k.dt = 1.0 / simd::mkv_chain_max_rate(x, k);
  simd::mkv_chain_apply(x, p, out, r, l, k);
  double total = 0.0;
  for (double v : out) {
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("forcing an instruction set") {
  const auto before = simd::active_isa();
  simd::force_isa(simd::Isa::scalar);
  CHECK(simd::active_isa() == simd::Isa::scalar);
  simd::force_isa(before);
  CHECK(simd::isa_name(simd::Isa::avx2) == "avx2");
}
