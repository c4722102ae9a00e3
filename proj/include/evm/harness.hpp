#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "evm/evm.hpp"
#include "evm/types.hpp"

namespace evm::harness {

/// Class counts describing an openness configuration: trained classes,
/// classes to be recognized, classes present at evaluation.
struct OpennessConfig {
  int training = 0;
  int recognized = 0;
  int evaluation = 0;
};

/// 0.5 * (1 - sqrt(2 * C_T / (C_R + C_E))); zero in the closed set and
/// growing with the number of evaluation-only classes.
double dynamic_delta(const OpennessConfig& cfg);

/// Macro-averaged F1 over the known classes of (truth, prediction) pairs,
/// with UNKNOWN treated as an ordinary outcome and 0/0 ratios scored 0.
double macro_f1(const std::vector<std::pair<ClassId, ClassId>>& truth_pred);

/// Retained extreme vectors divided by training points seen.
double vector_ratio(const EvmModel& model, std::int64_t training_points_seen);

struct ProtocolRow {
  int fold = 0;
  int step = 0;
  int unknown_classes = 0;
  std::int64_t ev_count = 0;
  std::int64_t point_count = 0;
  double delta = 0.0;
  double f1 = 0.0;
  double f1_no_reject = 0.0;  // same predictions scored with delta forced to 0
  double accuracy = 0.0;
  double vector_ratio = 0.0;
};

struct ProtocolAggregate {
  int step = 0;
  int unknown_classes = 0;
  double delta = 0.0;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_vector_ratio = 0.0;
  int folds = 0;
};

struct ProtocolReport {
  std::vector<ProtocolRow> rows;
  std::vector<ProtocolAggregate> aggregates;
};

/// Open-set evaluation: per fold, a seeded draw of `known_count` training
/// classes, then one evaluation step per number of unknown classes mixed
/// into the test set, with delta set dynamically from the openness.
ProtocolReport run_open_set_protocol(const Dataset& train_data, const Dataset& test_data,
                                     int folds, int known_count, const HyperParams& hyper,
                                     DistanceMetric metric, std::uint64_t seed,
                                     unsigned threads = 0);

/// Open-world evaluation: train on the first batch, then alternate
/// evaluation (known test data plus each unknown pool) and incremental
/// updates. When `tests` is empty the cumulative training batches stand in
/// as the known evaluation data.
ProtocolReport run_open_world_protocol(const std::vector<Dataset>& batches,
                                       const std::vector<Dataset>& unknown_pools,
                                       const HyperParams& hyper, DistanceMetric metric,
                                       const std::vector<Dataset>& tests = {},
                                       unsigned threads = 0);

/// Cross-class validation of the rejection threshold: each fold holds out a
/// round-robin subset of classes as unknowns; returns the grid delta with
/// the best mean F1 (ties to the smallest delta).
double cross_class_validate_delta(const Dataset& train_data, int folds,
                                  const std::vector<double>& delta_grid,
                                  const HyperParams& hyper, DistanceMetric metric,
                                  unsigned threads = 0);

}  // namespace evm::harness
