#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "evm/psi.hpp"
#include "evm/reduce.hpp"
#include "evm/rng.hpp"
#include "testutil.hpp"

using namespace evm;
using testutil::vec;

namespace {

// Hand-set models over the given points: unit shape, shared scale.
std::vector<PsiModel> uniform_models(const Matrix& points, double lambda) {
  std::vector<PsiModel> models;
  for (Index j = 0; j < points.cols(); ++j) {
    models.emplace_back(points.col(j), 1.0, lambda);
  }
  return models;
}

Matrix random_points(Index dim, Index n, Rng& rng, double spread) {
  Matrix m(dim, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < dim; ++i) m(i, j) = spread * rng.normal();
  }
  return m;
}

bool constraint_holds(const std::vector<PsiModel>& retained, const Matrix& points, double sigma,
                      DistanceMetric metric) {
  for (Index j = 0; j < points.cols(); ++j) {
    bool covered = false;
    for (const PsiModel& m : retained) {
      if (psi_probability(m, points.col(j), metric) >= sigma) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("coverage of a single point is its own singleton") {
  const Matrix points = testutil::columns({{0.0, 0.0}});
  const auto cov = build_coverage(uniform_models(points, 1.0), points, 0.7,
                                  DistanceMetric::kEuclidean);
  REQUIRE(cov.universe == 1);
  REQUIRE(cov.sets.size() == 1);
  CHECK(cov.sets[0] == std::vector<std::int32_t>{0});
}

TEST_CASE("sigma = 1 keeps only self-coverage for distinct points") {
  Rng rng(17);
  const Matrix points = random_points(3, 12, rng, 2.0);
  const auto cov = build_coverage(uniform_models(points, 5.0), points, 1.0,
                                  DistanceMetric::kEuclidean);
  for (std::int32_t i = 0; i < 12; ++i) {
    CHECK(cov.sets[static_cast<std::size_t>(i)] == std::vector<std::int32_t>{i});
  }
}

TEST_CASE("coverage matches an exhaustive psi threshold oracle") {
  // Five collinear points with wide unit-shape models.
  const Matrix points = testutil::columns({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}});
  const auto models = uniform_models(points, 3.0);
  const double sigma = 0.5;
  const auto cov = build_coverage(models, points, sigma, DistanceMetric::kEuclidean);

  for (std::int32_t i = 0; i < 5; ++i) {
    std::vector<std::int32_t> expected;
    for (std::int32_t j = 0; j < 5; ++j) {
      const double psi = std::exp(-std::abs(points(0, i) - points(0, j)) / 3.0);
      if (psi >= sigma) expected.push_back(j);
    }
    CHECK(cov.sets[static_cast<std::size_t>(i)] == expected);
  }
}

TEST_CASE("coverage validates lengths and sigma") {
  const Matrix points = testutil::columns({{0.0}, {1.0}});
  CHECK_THROWS_AS(build_coverage(uniform_models(points, 1.0), points.leftCols(1), 0.5,
                                 DistanceMetric::kEuclidean),
                  LengthMismatch);
  CHECK_THROWS_AS(build_coverage(uniform_models(points, 1.0), points, 0.0,
                                 DistanceMetric::kEuclidean),
                  InvalidArgument);
}

TEST_CASE("greedy picks a universal set alone") {
  CoverageSets cov;
  cov.universe = 4;
  cov.sets = {{0}, {1}, {0, 1, 2, 3}, {2}};
  const auto picks = greedy_set_cover(cov);
  CHECK(picks == std::vector<std::int32_t>{2});
}

TEST_CASE("greedy selects every disjoint singleton") {
  CoverageSets cov;
  cov.universe = 4;
  cov.sets = {{0}, {1}, {2}, {3}};
  const auto picks = greedy_set_cover(cov);
  CHECK(picks == std::vector<std::int32_t>{0, 1, 2, 3});
}

TEST_CASE("greedy rejects an uncoverable universe") {
  CoverageSets cov;
  cov.universe = 3;
  cov.sets = {{0}, {0, 1}, {}};
  CHECK_THROWS_AS(greedy_set_cover(cov), UncoverableUniverse);
}

TEST_CASE("greedy stays within the harmonic bound of the exact optimum") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = static_cast<std::int32_t>(3 + rng.bounded(10));  // universe up to 12
    CoverageSets cov;
    cov.universe = n;
    cov.sets.resize(static_cast<std::size_t>(n));
    for (std::int32_t i = 0; i < n; ++i) {
      auto& set = cov.sets[static_cast<std::size_t>(i)];
      set.push_back(i);  // self-coverage, keeps the instance feasible
      for (std::int32_t j = 0; j < n; ++j) {
        if (j != i && rng.next_unit() < 0.3) set.push_back(j);
      }
      std::sort(set.begin(), set.end());
    }

    const auto greedy = greedy_set_cover(cov);
    const int optimum = testutil::brute_force_set_cover(cov.sets, n);
    CHECK(static_cast<double>(greedy.size()) <=
          (1.0 + std::log(static_cast<double>(n))) * static_cast<double>(optimum));
  }
}

TEST_CASE("tight cluster reduces to one extreme vector") {
  Rng rng(31);
  const Matrix points = random_points(2, 20, rng, 0.01);
  // Wide scale: every pairwise psi stays above 0.9.
  const auto models = uniform_models(points, 10.0);
  const auto retained = reduce_class(models, points, 0.5, DistanceMetric::kEuclidean);
  CHECK(retained.size() == 1);
}

TEST_CASE("sigma = 1 over distinct points retains everything") {
  Rng rng(32);
  const Matrix points = random_points(2, 15, rng, 3.0);
  const auto retained =
      reduce_class(uniform_models(points, 1.0), points, 1.0, DistanceMetric::kEuclidean);
  CHECK(retained.size() == 15);
}

TEST_CASE("reduction output satisfies the coverage constraint and subset property") {
  Rng rng(33);
  for (double sigma : {0.2, 0.5, 0.8}) {
    const Matrix points = random_points(2, 40, rng, 1.0);
    std::vector<PsiModel> models;
    for (Index j = 0; j < 40; ++j) {
      models.emplace_back(points.col(j), 1.0 + rng.next_unit(), 0.5 + 2.0 * rng.next_unit());
    }
    const auto retained = reduce_class(models, points, sigma, DistanceMetric::kEuclidean);
    CHECK(constraint_holds(retained, points, sigma, DistanceMetric::kEuclidean));

    // Every retained model is one of the inputs, parameters untouched.
    for (const PsiModel& r : retained) {
      bool found = false;
      for (const PsiModel& m : models) {
        if (m.ev == r.ev && m.kappa == r.kappa && m.lambda == r.lambda) {
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("lowering sigma never increases the greedy count") {
  Rng rng(34);
  const Matrix points = random_points(3, 30, rng, 1.5);
  std::vector<PsiModel> models;
  for (Index j = 0; j < 30; ++j) {
    models.emplace_back(points.col(j), 1.4, 1.0);
  }
  std::size_t prev = 0;
  for (double sigma : {1.0, 0.8, 0.6, 0.4, 0.2, 0.05}) {
    const auto retained = reduce_class(models, points, sigma, DistanceMetric::kEuclidean);
    if (prev > 0) CHECK(retained.size() <= prev);
    prev = retained.size();
  }
}

TEST_CASE("reduction is invariant to point order") {
  Rng rng(35);
  const Matrix points = random_points(2, 25, rng, 1.0);
  std::vector<PsiModel> models;
  for (Index j = 0; j < 25; ++j) {
    models.emplace_back(points.col(j), 1.0, 0.8);
  }
  const auto base = reduce_class(models, points, 0.5, DistanceMetric::kEuclidean);

  std::vector<Index> perm(25);
  for (Index i = 0; i < 25; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);
  Matrix shuffled_points(2, 25);
  std::vector<PsiModel> shuffled_models;
  for (Index j = 0; j < 25; ++j) {
    shuffled_points.col(j) = points.col(perm[static_cast<std::size_t>(j)]);
    shuffled_models.push_back(models[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])]);
  }
  const auto permuted =
      reduce_class(shuffled_models, shuffled_points, 0.5, DistanceMetric::kEuclidean);

  REQUIRE(permuted.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(permuted[i].ev == base[i].ev);
    CHECK(permuted[i].kappa == base[i].kappa);
    CHECK(permuted[i].lambda == base[i].lambda);
  }
}

TEST_CASE("budgeted reduction basics") {
  Rng rng(36);
  const Matrix points = random_points(2, 20, rng, 0.01);
  const auto models = uniform_models(points, 10.0);

  CHECK_THROWS_AS(reduce_budgeted(models, points, 0, DistanceMetric::kEuclidean), BudgetZero);

  const auto all = reduce_budgeted(models, points, 20, DistanceMetric::kEuclidean);
  CHECK(all.models.size() == 20);
  CHECK(all.sigma_used == 1.0);

  const auto one = reduce_budgeted(models, points, 1, DistanceMetric::kEuclidean);
  CHECK(one.models.size() == 1);
}

TEST_CASE("budgeted reduction respects the budget on spread-out data") {
  Rng rng(37);
  const Matrix points = random_points(2, 40, rng, 2.0);
  std::vector<PsiModel> models;
  for (Index j = 0; j < 40; ++j) {
    models.emplace_back(points.col(j), 1.2, 0.7);
  }
  for (int budget : {3, 10, 25}) {
    const auto result = reduce_budgeted(models, points, budget, DistanceMetric::kEuclidean);
    CHECK(result.models.size() <= static_cast<std::size_t>(budget));
    CHECK(result.models.size() >= 1);
    CHECK(result.sigma_used > 0.0);
    CHECK(result.sigma_used <= 1.0);
  }
}
