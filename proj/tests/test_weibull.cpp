#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "evm/rng.hpp"
#include "evm/weibull.hpp"
#include "testutil.hpp"

using namespace evm;
using testutil::vec;

namespace {

Vector draws(double kappa, double lambda, Index n, std::uint64_t seed) {
  Rng rng(seed);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = rng.weibull(kappa, lambda);
  return out;
}

}  // namespace

TEST_CASE("recovers the generating parameters of Weibull(2, 1)") {
  const WeibullFit fit = fit_weibull(draws(2.0, 1.0, 10000, 1001));
  CHECK(fit.converged);
  CHECK(fit.kappa > 1.94);
  CHECK(fit.kappa < 2.06);
  CHECK(fit.lambda > 0.98);
  CHECK(fit.lambda < 1.02);
}

TEST_CASE("recovers an exponential as Weibull with unit shape") {
  // Exponential(mean 2) is Weibull(kappa = 1, lambda = 2).
  const WeibullFit fit = fit_weibull(draws(1.0, 2.0, 10000, 2002));
  CHECK(fit.converged);
  CHECK(fit.kappa > 0.97);
  CHECK(fit.kappa < 1.03);
  CHECK(fit.lambda > 1.94);
  CHECK(fit.lambda < 2.06);
}

TEST_CASE("degenerate and undersized tails are rejected") {
  CHECK_THROWS_AS(fit_weibull(vec({1.0, 1.0, 1.0})), DegenerateTail);
  CHECK_THROWS_AS(fit_weibull(vec({1.0})), TooFewSamples);
  CHECK_THROWS_AS(fit_weibull(vec({1.0, -2.0})), NonPositiveValue);
}

TEST_CASE("zero tail values are clamped, not dropped") {
  const WeibullFit fit = fit_weibull(vec({0.0, 1.0, 2.0, 3.0}));
  CHECK(fit.zeros_clamped == 1);
  CHECK(fit.n == 4);
  CHECK(fit.kappa > 0.0);
  CHECK(fit.lambda > 0.0);
}

TEST_CASE("fit is scale-equivariant") {
  const Vector tail = draws(1.7, 0.8, 500, 3003);
  const WeibullFit base = fit_weibull(tail);
  for (double c : {0.01, 0.5, 3.0, 250.0}) {
    const WeibullFit scaled = fit_weibull(tail * c);
    CHECK(scaled.kappa == doctest::Approx(base.kappa).epsilon(1e-5));
    CHECK(scaled.lambda == doctest::Approx(base.lambda * c).epsilon(1e-5));
  }
}

TEST_CASE("fit is permutation-invariant") {
  Rng rng(4004);
  Vector tail = draws(3.0, 2.0, 64, 4004);
  const WeibullFit base = fit_weibull(tail);
  std::vector<double> shuffled(tail.data(), tail.data() + tail.size());
  rng.shuffle(shuffled);
  Vector tail2(tail.size());
  for (Index i = 0; i < tail.size(); ++i) tail2[i] = shuffled[static_cast<std::size_t>(i)];
  const WeibullFit again = fit_weibull(tail2);
  CHECK(again.kappa == doctest::Approx(base.kappa).epsilon(1e-9));
  CHECK(again.lambda == doctest::Approx(base.lambda).epsilon(1e-9));
}

TEST_CASE("returned parameters beat a surrounding likelihood grid") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Vector tail = draws(1.3, 4.0, 40, seed);
    const WeibullFit fit = fit_weibull(tail);
    const double at_fit = testutil::weibull_log_likelihood(tail, fit.kappa, fit.lambda);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) {
        const double kappa = fit.kappa * (0.8 + 0.4 * i / 49.0);
        const double lambda = fit.lambda * (0.8 + 0.4 * j / 49.0);
        CHECK(at_fit >= testutil::weibull_log_likelihood(tail, kappa, lambda) - 1e-7);
      }
    }
  }
}

TEST_CASE("fit agrees with an independent grid-search MLE") {
  const Vector tail = draws(2.4, 1.6, 200, 5005);
  const WeibullFit fit = fit_weibull(tail);
  const auto [kappa, lambda] = testutil::grid_mle(tail);
  CHECK(fit.kappa == doctest::Approx(kappa).epsilon(1e-3));
  CHECK(fit.lambda == doctest::Approx(lambda).epsilon(1e-3));
}

TEST_CASE("survival function analytic values") {
  CHECK(weibull_survival(0.0, 2.0, 1.0) == 1.0);
  CHECK(weibull_survival(0.0, 0.3, 17.0) == 1.0);
  CHECK(weibull_survival(2.0, 5.0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(weibull_survival(4.0, 1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(weibull_survival(1.0, -1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(weibull_survival(-0.5, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("survival is non-increasing on a dense grid") {
  Rng rng(6006);
  for (int trial = 0; trial < 20; ++trial) {
    const double kappa = 0.2 + 6.0 * rng.next_unit();
    const double lambda = 0.05 + 5.0 * rng.next_unit();
    double prev = weibull_survival(0.0, kappa, lambda);
    CHECK(prev == 1.0);
    for (int i = 1; i <= 1000; ++i) {
      const double d = 4.0 * lambda * i / 1000.0;
      const double s = weibull_survival(d, kappa, lambda);
      CHECK(s <= prev);
      prev = s;
    }
  }
}
