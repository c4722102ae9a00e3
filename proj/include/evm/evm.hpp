#pragma once

#include <cstddef>
#include <vector>

#include "evm/types.hpp"

namespace evm {

/// Fit diagnostics accumulated across a training or update pass.
struct TrainStats {
  std::size_t degenerate_fits = 0;
  std::size_t unconverged_fits = 0;
  std::size_t zeros_clamped = 0;
  std::size_t refit_evs = 0;  // update passes only
};

/// Trains an EVM: fits one Psi-model per training point against all points
/// of the other classes, then reduces each class at sigma. Per-anchor fits
/// fan out over `threads` workers (0 = automatic); the result is identical
/// for any thread count.
EvmModel train(const Dataset& data, const HyperParams& hyper, DistanceMetric metric,
               unsigned threads = 0, TrainStats* stats = nullptr);

/// Mean of the k largest Psi values the class's extreme vectors assign to
/// the query (all of them when the class has fewer than k).
double class_probability(const EvmModel& model, const Eigen::Ref<const Vector>& query,
                         ClassId class_id);

/// Per-class probabilities plus the thresholded decision: the argmax class
/// when its probability reaches delta, UNKNOWN otherwise. Argmax ties go to
/// the smallest class id.
Prediction predict(const EvmModel& model, const Eigen::Ref<const Vector>& query, double delta);

/// predict with the model's stored rejection threshold.
Prediction predict(const EvmModel& model, const Eigen::Ref<const Vector>& query);

std::vector<Prediction> predict_many(const EvmModel& model,
                                     const Eigen::Ref<const Matrix>& queries, double delta,
                                     unsigned threads = 0);

/// Batch-incremental update. Anchors draw negatives from the other classes'
/// current extreme vectors plus the other-class batch points; existing
/// extreme vectors are refit only when a batch point enters their tau-tail.
/// Returns a new model; the input is untouched.
EvmModel update(const EvmModel& model, const Dataset& batch, unsigned threads = 0,
                TrainStats* stats = nullptr);

}  // namespace evm
