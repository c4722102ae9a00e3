#pragma once

#include "evm/types.hpp"

namespace evm {

/// Metric distance between two vectors. Cosine is the dissimilarity
/// 1 - (a . b) / (|a||b|), clamped into [0, 2]; it requires nonzero inputs
/// and is not a strict metric.
double distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                DistanceMetric metric);

/// Distance from `a` to every column of `points`. Entry j depends only on
/// column j, so results do not change when columns are permuted.
Vector distances_to_all(const Eigen::Ref<const Vector>& a,
                        const Eigen::Ref<const Matrix>& points, DistanceMetric metric);

/// The min(tau, #negatives) smallest half-distances from `anchor` to the
/// columns of `negatives`, ascending. Ties at the cutoff keep the earlier
/// column.
Vector nearest_negative_margins(const Eigen::Ref<const Vector>& anchor,
                                const Eigen::Ref<const Matrix>& negatives, int tau,
                                DistanceMetric metric);

}  // namespace evm
