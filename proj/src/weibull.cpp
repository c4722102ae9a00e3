#include "evm/weibull.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evm {

namespace {

constexpr double kKappaTolerance = 1e-6;
constexpr int kMaxIterations = 100;

// Profile objective for the shape parameter. With r_i = m_i / m_max and
// l_i = ln r_i, the stationarity condition in kappa reads
//   g(k) = sum(r^k l) / sum(r^k) + ln m_max - 1/k - mean(ln m) = 0,
// and g is strictly increasing with a single root for non-degenerate tails.
struct Profile {
  Vector ratios;      // m / m_max, in (0, 1]
  Vector log_ratios;  // ln(m / m_max), <= 0
  double log_max = 0.0;
  double mean_log = 0.0;

  explicit Profile(const Vector& m) {
    const double m_max = m.maxCoeff();
    log_max = std::log(m_max);
    ratios = m / m_max;
    log_ratios = ratios.array().log();
    mean_log = m.array().log().mean();
  }

  // Returns g(k) and g'(k); the weights r^k are bounded by 1, so no overflow.
  std::pair<double, double> value_and_slope(double k) const {
    const Eigen::ArrayXd w = ratios.array().pow(k);
    const double s0 = w.sum();
    const double s1 = (w * log_ratios.array()).sum();
    const double s2 = (w * log_ratios.array().square()).sum();
    const double g = s1 / s0 + log_max - 1.0 / k - mean_log;
    const double slope = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k);
    return {g, slope};
  }

  double scale_at(double k) const {
    const double n = static_cast<double>(ratios.size());
    return std::exp(log_max) * std::pow(ratios.array().pow(k).sum() / n, 1.0 / k);
  }
};

}  // namespace

WeibullFit fit_weibull(const Eigen::Ref<const Vector>& tail) {
  const Index n = tail.size();
  if (n < 2) {
    throw TooFewSamples("fit_weibull: need at least 2 tail values, got " + std::to_string(n));
  }

  Vector m = tail;
  int zeros_clamped = 0;
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(m[i]) || m[i] < 0.0) {
      throw NonPositiveValue("fit_weibull: tail value " + std::to_string(m[i]) +
                             " at index " + std::to_string(i));
    }
    if (m[i] == 0.0) {
      m[i] = kTailEpsilon;
      ++zeros_clamped;
    }
  }
  if (m.minCoeff() == m.maxCoeff()) {
    throw DegenerateTail("fit_weibull: all tail values equal " + std::to_string(m[0]));
  }

  // Coefficient-of-variation start (Justus' approximation).
  const double mean = m.mean();
  const double sd = std::sqrt((m.array() - mean).square().sum() / static_cast<double>(n - 1));
  double kappa = std::pow(sd / mean, -1.086);
  kappa = std::clamp(kappa, 1e-3, 1e3);

  const Profile profile(m);
  int evals = 0;
  auto g_at = [&](double k) {
    ++evals;
    return profile.value_and_slope(k);
  };

  // Bracket the root, then safeguarded Newton.
  double lo = kappa, hi = kappa;
  if (g_at(kappa).first < 0.0) {
    while (evals < kMaxIterations) {
      hi *= 2.0;
      if (g_at(hi).first >= 0.0) break;
      lo = hi;
    }
  } else {
    while (evals < kMaxIterations) {
      lo *= 0.5;
      if (g_at(lo).first <= 0.0) break;
      hi = lo;
    }
  }
  if (!(kappa >= lo && kappa <= hi)) kappa = 0.5 * (lo + hi);

  bool converged = false;
  while (evals < kMaxIterations) {
    auto [g, slope] = g_at(kappa);
    double next = kappa - g / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    (g > 0.0 ? hi : lo) = kappa;
    const double step = std::abs(next - kappa);
    kappa = next;
    if (step <= kKappaTolerance * std::max(1.0, kappa) || hi - lo <= kKappaTolerance) {
      converged = true;
      break;
    }
  }

  WeibullFit fit;
  fit.kappa = kappa;
  fit.lambda = profile.scale_at(kappa);
  fit.n = n;
  fit.converged = converged;
  fit.zeros_clamped = zeros_clamped;
  return fit;
}

double weibull_survival(double d, double kappa, double lambda) {
  if (!(std::isfinite(kappa) && kappa > 0.0) || !(std::isfinite(lambda) && lambda > 0.0)) {
    throw InvalidArgument("weibull_survival: shape and scale must be finite and positive");
  }
  if (!(d >= 0.0)) {
    throw InvalidArgument("weibull_survival: distance must be non-negative");
  }
  return std::exp(-std::pow(d / lambda, kappa));
}

}  // namespace evm
