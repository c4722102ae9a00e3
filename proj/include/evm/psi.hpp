#pragma once

#include "evm/types.hpp"

namespace evm {

/// Fits one extreme-vector model: the anchor point plus the Weibull of its
/// tau smallest half-distances to the negatives. Zero-variance tails raise
/// DegenerateTail; the training layer uses fit_psi_tolerant instead.
PsiModel fit_psi(const Eigen::Ref<const Vector>& anchor,
                 const Eigen::Ref<const Matrix>& negatives, int tau, DistanceMetric metric);

struct PsiFit {
  PsiModel model;
  bool degenerate = false;  // fell back to kappa = 1, lambda = common margin
  bool converged = true;
  int zeros_clamped = 0;
};

/// fit_psi with the degenerate fallback: a single-margin or zero-variance
/// tail yields kappa = 1 and the common margin as scale, so every training
/// point stays coverable during reduction.
PsiFit fit_psi_tolerant(const Eigen::Ref<const Vector>& anchor,
                        const Eigen::Ref<const Matrix>& negatives, int tau,
                        DistanceMetric metric);

/// Probability that the query falls inside the margin modeled at model.ev.
double psi_probability(const PsiModel& model, const Eigen::Ref<const Vector>& query,
                       DistanceMetric metric);

/// psi_probability against every column of `queries`.
Vector psi_probabilities(const PsiModel& model, const Eigen::Ref<const Matrix>& queries,
                         DistanceMetric metric);

}  // namespace evm
