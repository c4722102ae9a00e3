#include "evm/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace evm {

namespace {

void require_finite_vector(const Vector& v, const char* what) {
  if (v.size() == 0) {
    throw InvalidArgument(std::string(what) + ": feature vector is empty");
  }
  if (!v.allFinite()) {
    throw InvalidArgument(std::string(what) + ": feature vector has non-finite entries");
  }
}

}  // namespace

Sample::Sample(Vector features_, ClassId label_)
    : features(std::move(features_)), label(label_) {
  require_finite_vector(features, "Sample");
  if (label < 0) {
    throw InvalidArgument("Sample: label must be a non-negative integer");
  }
}

Dataset::Dataset(Matrix features, std::vector<ClassId> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.rows() == 0) {
    throw InvalidArgument("Dataset: dimensionality must be positive");
  }
  if (static_cast<Index>(labels_.size()) != features_.cols()) {
    throw LengthMismatch("Dataset: " + std::to_string(features_.cols()) + " samples but " +
                         std::to_string(labels_.size()) + " labels");
  }
  if (!features_.allFinite()) {
    throw InvalidArgument("Dataset: features contain non-finite entries");
  }
  for (ClassId l : labels_) {
    if (l < 0) throw InvalidArgument("Dataset: labels must be non-negative integers");
  }
}

Dataset Dataset::empty(Index dim) {
  if (dim <= 0) throw InvalidArgument("Dataset: dimensionality must be positive");
  Dataset d;
  d.features_ = Matrix(dim, 0);
  return d;
}

Dataset Dataset::from_samples(const std::vector<Sample>& samples) {
  if (samples.empty()) {
    throw InvalidArgument("Dataset: cannot infer dimensionality from zero samples");
  }
  const Index dim = samples.front().features.size();
  Matrix features(dim, static_cast<Index>(samples.size()));
  std::vector<ClassId> labels;
  labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.size() != dim) {
      throw DimensionMismatch("Dataset: sample " + std::to_string(i) + " has dimension " +
                              std::to_string(samples[i].features.size()) + ", expected " +
                              std::to_string(dim));
    }
    features.col(static_cast<Index>(i)) = samples[i].features;
    labels.push_back(samples[i].label);
  }
  return Dataset(std::move(features), std::move(labels));
}

std::vector<ClassId> Dataset::class_ids() const {
  std::set<ClassId> ids(labels_.begin(), labels_.end());
  return {ids.begin(), ids.end()};
}

std::vector<Index> Dataset::indices_of(ClassId id) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == id) out.push_back(static_cast<Index>(i));
  }
  return out;
}

Matrix Dataset::columns(const std::vector<Index>& idx) const {
  Matrix out(dim(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.col(static_cast<Index>(j)) = features_.col(idx[j]);
  }
  return out;
}

HyperParams::HyperParams(int tau_, int k_, double sigma_, double delta_)
    : tau(tau_), k(k_), sigma(sigma_), delta(delta_) {
  validate();
}

void HyperParams::validate() const {
  if (tau < 2) throw InvalidArgument("HyperParams: tau must be >= 2");
  if (k < 1) throw InvalidArgument("HyperParams: k must be >= 1");
  if (!(sigma > 0.0 && sigma <= 1.0)) {
    throw InvalidArgument("HyperParams: sigma must lie in (0, 1]");
  }
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw InvalidArgument("HyperParams: delta must lie in [0, 1)");
  }
}

PsiModel::PsiModel(Vector ev_, double kappa_, double lambda_)
    : ev(std::move(ev_)), kappa(kappa_), lambda(lambda_) {
  validate();
}

void PsiModel::validate() const {
  require_finite_vector(ev, "PsiModel");
  if (!(std::isfinite(kappa) && kappa > 0.0)) {
    throw InvalidArgument("PsiModel: kappa must be finite and positive");
  }
  if (!(std::isfinite(lambda) && lambda > 0.0)) {
    throw InvalidArgument("PsiModel: lambda must be finite and positive");
  }
}

EvmModel::EvmModel(std::map<ClassId, std::vector<PsiModel>> classes_, DistanceMetric metric_,
                   HyperParams hyper_, Index dim_)
    : classes(std::move(classes_)), metric(metric_), hyper(hyper_), dim(dim_) {
  validate();
}

void EvmModel::validate() const {
  if (dim <= 0) throw InvalidArgument("EvmModel: dimensionality must be positive");
  hyper.validate();
  for (const auto& [id, evs] : classes) {
    if (id < 0) throw InvalidArgument("EvmModel: class ids must be non-negative");
    if (evs.empty()) {
      throw InvalidArgument("EvmModel: class " + std::to_string(id) + " has no extreme vectors");
    }
    for (const PsiModel& m : evs) {
      m.validate();
      if (m.ev.size() != dim) {
        throw DimensionMismatch("EvmModel: extreme vector of class " + std::to_string(id) +
                                " has dimension " + std::to_string(m.ev.size()) + ", expected " +
                                std::to_string(dim));
      }
    }
  }
}

Index EvmModel::total_evs() const {
  Index n = 0;
  for (const auto& [id, evs] : classes) n += static_cast<Index>(evs.size());
  return n;
}

}  // namespace evm
