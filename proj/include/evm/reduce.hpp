#pragma once

#include <cstdint>
#include <vector>

#include "evm/types.hpp"

namespace evm {

/// Per-point coverage sets over one class: sets[i] holds the indices j whose
/// point falls inside model i's sigma-probability region. Self-coverage
/// (i in sets[i]) always holds since Psi is 1 at distance zero.
struct CoverageSets {
  std::vector<std::vector<std::int32_t>> sets;
  std::int32_t universe = 0;
};

/// sets[i] = { j : Psi_i(points[j]) >= sigma }.
CoverageSets build_coverage(const std::vector<PsiModel>& models,
                            const Eigen::Ref<const Matrix>& points, double sigma,
                            DistanceMetric metric);

/// Greedy set cover: repeatedly takes the set covering the most uncovered
/// elements (ties to the lowest index) until the universe is covered.
/// Returns the selected indices in pick order; the size is within a factor
/// (1 + ln N) of the optimum.
std::vector<std::int32_t> greedy_set_cover(const CoverageSets& cov);

/// Coverage construction plus greedy selection; retained models keep their
/// original shape and scale.
std::vector<PsiModel> reduce_class(const std::vector<PsiModel>& models,
                                   const Eigen::Ref<const Matrix>& points, double sigma,
                                   DistanceMetric metric);

struct BudgetedReduction {
  std::vector<PsiModel> models;
  double sigma_used = 1.0;
};

/// Binary-searches sigma in (0, 1] for the reduction whose extreme-vector
/// count comes closest to the budget without exceeding it; if every sigma
/// overshoots, the pick-ordered selection is truncated to the budget.
BudgetedReduction reduce_budgeted(const std::vector<PsiModel>& models,
                                  const Eigen::Ref<const Matrix>& points, int budget,
                                  DistanceMetric metric);

}  // namespace evm
