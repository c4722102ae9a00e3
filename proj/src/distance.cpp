#include "evm/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace evm {

namespace {

void check_dims(Index a, Index b) {
  if (a != b) {
    throw DimensionMismatch("distance: dimension " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

double cosine_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw ZeroVector("cosine distance requires nonzero vectors");
  }
  const double d = 1.0 - a.dot(b) / (na * nb);
  return std::clamp(d, 0.0, 2.0);
}

}  // namespace

double distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                DistanceMetric metric) {
  check_dims(a.size(), b.size());
  switch (metric) {
    case DistanceMetric::kEuclidean:
      return (a - b).norm();
    case DistanceMetric::kCosine:
      return cosine_distance(a, b);
  }
  throw InvalidArgument("distance: unknown metric");
}

Vector distances_to_all(const Eigen::Ref<const Vector>& a,
                        const Eigen::Ref<const Matrix>& points, DistanceMetric metric) {
  check_dims(a.size(), points.rows());
  const Index n = points.cols();
  Vector out(n);
  switch (metric) {
    case DistanceMetric::kEuclidean:
      out = (points.colwise() - a).colwise().norm().transpose();
      return out;
    case DistanceMetric::kCosine: {
      const double na = a.norm();
      if (na == 0.0) throw ZeroVector("cosine distance requires nonzero vectors");
      for (Index j = 0; j < n; ++j) {
        const double nj = points.col(j).norm();
        if (nj == 0.0) {
          throw ZeroVector("cosine distance requires nonzero vectors (column " +
                           std::to_string(j) + ")");
        }
        out[j] = std::clamp(1.0 - points.col(j).dot(a) / (na * nj), 0.0, 2.0);
      }
      return out;
    }
  }
  throw InvalidArgument("distance: unknown metric");
}

Vector nearest_negative_margins(const Eigen::Ref<const Vector>& anchor,
                                const Eigen::Ref<const Matrix>& negatives, int tau,
                                DistanceMetric metric) {
  if (negatives.cols() == 0) {
    throw EmptyNegatives("nearest_negative_margins: no negative samples");
  }
  if (tau < 1) {
    throw InvalidArgument("nearest_negative_margins: tau must be positive");
  }

  const Vector margins = distances_to_all(anchor, negatives, metric) / 2.0;
  const Index n = margins.size();
  const Index keep = std::min<Index>(tau, n);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const auto by_margin_then_position = [&](Index i, Index j) {
    return margins[i] < margins[j] || (margins[i] == margins[j] && i < j);
  };
  std::nth_element(order.begin(), order.begin() + keep - 1, order.end(),
                   by_margin_then_position);
  std::sort(order.begin(), order.begin() + keep, by_margin_then_position);

  Vector out(keep);
  for (Index i = 0; i < keep; ++i) out[i] = margins[order[static_cast<std::size_t>(i)]];
  return out;
}

}  // namespace evm
