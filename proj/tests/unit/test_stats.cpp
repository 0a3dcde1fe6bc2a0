#include "doctest.h"

#include <vector>

#include "fwbrw/rng.hpp"
#include "fwbrw/stats.hpp"

using namespace fwbrw;

TEST_CASE("summary of a small sample") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto s = stats::summarize(xs);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
  CHECK(s.n == 4);
  CHECK(stats::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(stats::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("linear fit recovers an exact line") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{1.0, 3.0, 5.0, 7.0};
  const auto fit = stats::linear_fit(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
}

TEST_CASE("accumulator merge equals sequential accumulation") {
  stats::Accumulator all, a, b;
  Rng rng = make_rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = standard_normal(rng);
    all.add(x);
    (i < 400 ? a : b).add(x);
  }
  a.merge(b);
  CHECK(a.count() == all.count());
  CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
  CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}

TEST_CASE("derived seeds differ per stream and are reproducible") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  Rng a = make_rng(42, 3), b = make_rng(42, 3);
  CHECK(a() == b());
}
