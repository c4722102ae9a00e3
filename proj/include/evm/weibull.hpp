#pragma once

#include "evm/types.hpp"

namespace evm {

/// Zero tail values (duplicate points across classes) are raised to this
/// epsilon so they stay inside the Weibull support.
inline constexpr double kTailEpsilon = 1e-12;

/// Maximum-likelihood estimate of a two-parameter Weibull.
struct WeibullFit {
  double kappa = 0.0;
  double lambda = 0.0;
  Index n = 0;             // tail length used for the fit
  bool converged = false;  // solver met tolerance within the iteration cap
  int zeros_clamped = 0;   // inputs raised to kTailEpsilon
};

/// Fits (kappa, lambda) maximizing the Weibull log-likelihood of the tail.
/// The shape solves the 1-D profile equation by safeguarded Newton from a
/// coefficient-of-variation start (tolerance 1e-6 on kappa, 100 iterations);
/// the scale follows in closed form. Hitting the cap returns the best
/// iterate with converged = false rather than failing.
WeibullFit fit_weibull(const Eigen::Ref<const Vector>& tail);

/// exp(-(d / lambda)^kappa): probability that d does not exceed the modeled
/// margin. Strictly decreasing in d, equals 1 at d = 0.
double weibull_survival(double d, double kappa, double lambda);

}  // namespace evm
