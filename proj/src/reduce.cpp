#include "evm/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "evm/distance.hpp"
#include "evm/psi.hpp"

namespace evm {

namespace {

constexpr int kMaxSigmaSearchIterations = 30;
constexpr double kSigmaSearchTolerance = 1e-4;

std::vector<PsiModel> select_models(const std::vector<PsiModel>& models,
                                    const std::vector<std::int32_t>& picks) {
  std::vector<PsiModel> out;
  out.reserve(picks.size());
  for (std::int32_t i : picks) out.push_back(models[static_cast<std::size_t>(i)]);
  return out;
}

// Lexicographic point order. Greedy ties resolve by position, so running the
// cover over this canonical order makes the reduction independent of how the
// training samples were presented.
std::vector<std::int32_t> canonical_order(const Eigen::Ref<const Matrix>& points) {
  std::vector<std::int32_t> order(static_cast<std::size_t>(points.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    for (Index r = 0; r < points.rows(); ++r) {
      if (points(r, a) != points(r, b)) return points(r, a) < points(r, b);
    }
    return a < b;
  });
  return order;
}

struct CanonicalClass {
  std::vector<PsiModel> models;
  Matrix points;
};

CanonicalClass canonicalize(const std::vector<PsiModel>& models,
                            const Eigen::Ref<const Matrix>& points) {
  const std::vector<std::int32_t> order = canonical_order(points);
  CanonicalClass out;
  out.models.reserve(models.size());
  out.points.resize(points.rows(), points.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.models.push_back(models[static_cast<std::size_t>(order[i])]);
    out.points.col(static_cast<Index>(i)) = points.col(order[i]);
  }
  return out;
}

}  // namespace

CoverageSets build_coverage(const std::vector<PsiModel>& models,
                            const Eigen::Ref<const Matrix>& points, double sigma,
                            DistanceMetric metric) {
  const auto n = static_cast<std::int32_t>(models.size());
  if (static_cast<Index>(n) != points.cols()) {
    throw LengthMismatch("build_coverage: " + std::to_string(models.size()) + " models vs " +
                         std::to_string(points.cols()) + " points");
  }
  if (n == 0) throw LengthMismatch("build_coverage: empty class");
  if (!(sigma > 0.0 && sigma <= 1.0)) {
    throw InvalidArgument("build_coverage: sigma must lie in (0, 1]");
  }

  // Psi >= sigma is tested as (d / lambda)^kappa <= -ln(sigma): the same
  // boundary, but immune to exp() saturating at 1 for sharp models. At
  // sigma = 1 the condition collapses to d == 0 exactly.
  const double exponent_cap = -std::log(sigma);
  CoverageSets cov;
  cov.universe = n;
  cov.sets.resize(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) {
    const PsiModel& model = models[static_cast<std::size_t>(i)];
    const Vector d = distances_to_all(model.ev, points, metric);
    auto& set = cov.sets[static_cast<std::size_t>(i)];
    for (std::int32_t j = 0; j < n; ++j) {
      const bool covered = sigma == 1.0
                               ? d[j] == 0.0
                               : std::pow(d[j] / model.lambda, model.kappa) <= exponent_cap;
      if (covered) set.push_back(j);
    }
  }
  return cov;
}

std::vector<std::int32_t> greedy_set_cover(const CoverageSets& cov) {
  const std::int32_t n = cov.universe;
  std::vector<char> covered(static_cast<std::size_t>(n), 0);
  std::vector<char> selected(cov.sets.size(), 0);
  std::vector<std::int32_t> picks;
  std::int32_t remaining = n;

  while (remaining > 0) {
    std::int32_t best = -1;
    std::int32_t best_gain = 0;
    for (std::size_t i = 0; i < cov.sets.size(); ++i) {
      if (selected[i]) continue;
      std::int32_t gain = 0;
      for (std::int32_t j : cov.sets[i]) {
        gain += !covered[static_cast<std::size_t>(j)];
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<std::int32_t>(i);
      }
    }
    if (best < 0) {
      throw UncoverableUniverse("greedy_set_cover: " + std::to_string(remaining) +
                                " elements cannot be covered by any set");
    }
    selected[static_cast<std::size_t>(best)] = 1;
    picks.push_back(best);
    for (std::int32_t j : cov.sets[static_cast<std::size_t>(best)]) {
      if (!covered[static_cast<std::size_t>(j)]) {
        covered[static_cast<std::size_t>(j)] = 1;
        --remaining;
      }
    }
  }
  return picks;
}

std::vector<PsiModel> reduce_class(const std::vector<PsiModel>& models,
                                   const Eigen::Ref<const Matrix>& points, double sigma,
                                   DistanceMetric metric) {
  const CanonicalClass cls = canonicalize(models, points);
  return select_models(cls.models,
                       greedy_set_cover(build_coverage(cls.models, cls.points, sigma, metric)));
}

BudgetedReduction reduce_budgeted(const std::vector<PsiModel>& models,
                                  const Eigen::Ref<const Matrix>& points, int budget,
                                  DistanceMetric metric) {
  if (budget < 1) throw BudgetZero("reduce_budgeted: budget must be >= 1");

  BudgetedReduction result;
  if (budget >= static_cast<int>(models.size())) {
    result.models = models;
    result.sigma_used = 1.0;
    return result;
  }

  const CanonicalClass cls = canonicalize(models, points);

  // The EV count grows with sigma, but only approximately monotonically, so
  // the search keeps the best feasible candidate it has seen.
  double lo = 0.0, hi = 1.0;
  bool have_feasible = false;
  std::vector<std::int32_t> best_picks;
  double best_sigma = 0.0;
  std::vector<std::int32_t> smallest_picks;
  double smallest_sigma = 1.0;

  for (int it = 0; it < kMaxSigmaSearchIterations && hi - lo > kSigmaSearchTolerance; ++it) {
    const double sigma = 0.5 * (lo + hi);
    const auto picks = greedy_set_cover(build_coverage(cls.models, cls.points, sigma, metric));
    const int count = static_cast<int>(picks.size());

    if (smallest_picks.empty() || count < static_cast<int>(smallest_picks.size())) {
      smallest_picks = picks;
      smallest_sigma = sigma;
    }
    if (count <= budget) {
      if (!have_feasible || count > static_cast<int>(best_picks.size()) ||
          (count == static_cast<int>(best_picks.size()) && sigma > best_sigma)) {
        best_picks = picks;
        best_sigma = sigma;
        have_feasible = true;
      }
      lo = sigma;
    } else {
      hi = sigma;
    }
  }

  if (have_feasible) {
    result.models = select_models(cls.models, best_picks);
    result.sigma_used = best_sigma;
  } else {
    // Greedy picks are ordered by coverage, so keeping the first `budget`
    // retains the most important extreme vectors.
    smallest_picks.resize(static_cast<std::size_t>(budget));
    result.models = select_models(cls.models, smallest_picks);
    result.sigma_used = smallest_sigma;
  }
  return result;
}

}  // namespace evm
