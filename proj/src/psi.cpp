#include "evm/psi.hpp"

#include <algorithm>

#include "evm/distance.hpp"
#include "evm/weibull.hpp"

namespace evm {

PsiModel fit_psi(const Eigen::Ref<const Vector>& anchor,
                 const Eigen::Ref<const Matrix>& negatives, int tau, DistanceMetric metric) {
  const Vector margins = nearest_negative_margins(anchor, negatives, tau, metric);
  const WeibullFit fit = fit_weibull(margins);
  return PsiModel(anchor, fit.kappa, fit.lambda);
}

PsiFit fit_psi_tolerant(const Eigen::Ref<const Vector>& anchor,
                        const Eigen::Ref<const Matrix>& negatives, int tau,
                        DistanceMetric metric) {
  Vector margins = nearest_negative_margins(anchor, negatives, tau, metric);

  PsiFit result;
  for (Index i = 0; i < margins.size(); ++i) {
    if (margins[i] == 0.0) {
      margins[i] = kTailEpsilon;
      ++result.zeros_clamped;
    }
  }

  if (margins.size() < 2 || margins.minCoeff() == margins.maxCoeff()) {
    result.model = PsiModel(anchor, 1.0, margins[0]);
    result.degenerate = true;
    return result;
  }

  const WeibullFit fit = fit_weibull(margins);
  result.model = PsiModel(anchor, fit.kappa, fit.lambda);
  result.converged = fit.converged;
  return result;
}

double psi_probability(const PsiModel& model, const Eigen::Ref<const Vector>& query,
                       DistanceMetric metric) {
  return weibull_survival(distance(model.ev, query, metric), model.kappa, model.lambda);
}

Vector psi_probabilities(const PsiModel& model, const Eigen::Ref<const Matrix>& queries,
                         DistanceMetric metric) {
  Vector d = distances_to_all(model.ev, queries, metric);
  for (Index i = 0; i < d.size(); ++i) {
    d[i] = weibull_survival(d[i], model.kappa, model.lambda);
  }
  return d;
}

}  // namespace evm
