#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <vector>

#include "evm/errors.hpp"

namespace evm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;  // one sample per column
using Index = Eigen::Index;
using ClassId = std::int64_t;

/// Reserved label for rejected queries; never a valid class id.
inline constexpr ClassId kUnknownLabel = -1;

/// Dissimilarity used for margins. Cosine similarity is mapped to the
/// distance 1 - cos(a, b), so both kinds yield a single scalar in [0, inf).
enum class DistanceMetric : std::uint8_t { kEuclidean = 0, kCosine = 1 };

/// A labeled feature vector.
struct Sample {
  Vector features;
  ClassId label = 0;

  Sample() = default;
  Sample(Vector features_, ClassId label_);
};

/// Immutable set of equal-dimension samples. Column j of features() is
/// sample j; labels() is aligned with the columns.
class Dataset {
 public:
  Dataset(Matrix features, std::vector<ClassId> labels);

  static Dataset empty(Index dim);
  static Dataset from_samples(const std::vector<Sample>& samples);

  Index dim() const { return features_.rows(); }
  Index size() const { return features_.cols(); }
  const Matrix& features() const { return features_; }
  const std::vector<ClassId>& labels() const { return labels_; }
  Vector sample(Index i) const { return features_.col(i); }
  ClassId label(Index i) const { return labels_[static_cast<std::size_t>(i)]; }

  /// Distinct labels, ascending.
  std::vector<ClassId> class_ids() const;
  /// Column indices carrying the given label, in input order.
  std::vector<Index> indices_of(ClassId id) const;
  /// Copy of the selected columns.
  Matrix columns(const std::vector<Index>& idx) const;

 private:
  Dataset() = default;

  Matrix features_;
  std::vector<ClassId> labels_;
};

/// Tail size tau, top-k average width, coverage threshold sigma and
/// rejection threshold delta.
struct HyperParams {
  int tau = 2;
  int k = 1;
  double sigma = 0.5;
  double delta = 0.0;

  HyperParams() = default;
  HyperParams(int tau_, int k_, double sigma_, double delta_);

  void validate() const;
};

/// One extreme vector with its Weibull shape and scale.
struct PsiModel {
  Vector ev;
  double kappa = 0.0;
  double lambda = 0.0;

  PsiModel() = default;
  PsiModel(Vector ev_, double kappa_, double lambda_);

  void validate() const;
};

/// Per-class extreme vectors plus the metric and hyperparameters they were
/// trained with. Immutable once built; updates produce a new model.
struct EvmModel {
  std::map<ClassId, std::vector<PsiModel>> classes;
  DistanceMetric metric = DistanceMetric::kEuclidean;
  HyperParams hyper;
  Index dim = 0;

  EvmModel() = default;
  EvmModel(std::map<ClassId, std::vector<PsiModel>> classes_, DistanceMetric metric_,
           HyperParams hyper_, Index dim_);

  void validate() const;
  Index total_evs() const;
};

/// Per-class inclusion probabilities and the thresholded decision.
struct Prediction {
  std::map<ClassId, double> per_class;
  ClassId label = kUnknownLabel;
};

}  // namespace evm
