#include "evm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "evm/rng.hpp"

namespace evm::harness {

namespace {

// Label a raw prediction under a rejection threshold.
ClassId decide(const Prediction& p, double delta) {
  ClassId best = kUnknownLabel;
  double best_prob = -1.0;
  for (const auto& [id, prob] : p.per_class) {
    if (prob > best_prob) {
      best_prob = prob;
      best = id;
    }
  }
  return (best != kUnknownLabel && best_prob >= delta) ? best : kUnknownLabel;
}

double accuracy_of(const std::vector<std::pair<ClassId, ClassId>>& pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& [truth, pred] : pairs) hits += truth == pred;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

Dataset subset_of(const Dataset& data, const std::set<ClassId>& keep) {
  std::vector<Index> idx;
  for (Index i = 0; i < data.size(); ++i) {
    if (keep.count(data.label(i))) idx.push_back(i);
  }
  std::vector<ClassId> labels;
  labels.reserve(idx.size());
  for (Index i : idx) labels.push_back(data.label(i));
  return Dataset(data.columns(idx), std::move(labels));
}

// Population mean and standard deviation of one row field across folds.
template <typename Getter>
std::pair<double, double> mean_std(const std::vector<const ProtocolRow*>& rows, Getter get) {
  double mean = 0.0;
  for (const ProtocolRow* r : rows) mean += get(*r);
  mean /= static_cast<double>(rows.size());
  double var = 0.0;
  for (const ProtocolRow* r : rows) {
    const double d = get(*r) - mean;
    var += d * d;
  }
  var /= static_cast<double>(rows.size());
  return {mean, std::sqrt(var)};
}

void aggregate_by_step(ProtocolReport& report) {
  std::map<int, std::vector<const ProtocolRow*>> by_step;
  for (const ProtocolRow& r : report.rows) by_step[r.step].push_back(&r);
  for (const auto& [step, rows] : by_step) {
    ProtocolAggregate agg;
    agg.step = step;
    agg.unknown_classes = rows.front()->unknown_classes;
    agg.delta = rows.front()->delta;
    agg.folds = static_cast<int>(rows.size());
    std::tie(agg.mean_f1, agg.std_f1) =
        mean_std(rows, [](const ProtocolRow& r) { return r.f1; });
    std::tie(agg.mean_accuracy, agg.std_accuracy) =
        mean_std(rows, [](const ProtocolRow& r) { return r.accuracy; });
    agg.mean_vector_ratio =
        mean_std(rows, [](const ProtocolRow& r) { return r.vector_ratio; }).first;
    report.aggregates.push_back(agg);
  }
}

}  // namespace

double dynamic_delta(const OpennessConfig& cfg) {
  if (cfg.recognized < 1 || cfg.training < cfg.recognized || cfg.evaluation < cfg.recognized) {
    throw InvalidArgument("dynamic_delta: need training >= recognized >= 1 and evaluation >= recognized");
  }
  const double radicand =
      2.0 * static_cast<double>(cfg.training) / static_cast<double>(cfg.recognized + cfg.evaluation);
  if (radicand > 1.0) {
    throw InvalidOpenness("dynamic_delta: 2*C_T exceeds C_R + C_E, threshold would be negative");
  }
  return 0.5 * (1.0 - std::sqrt(radicand));
}

double macro_f1(const std::vector<std::pair<ClassId, ClassId>>& truth_pred) {
  if (truth_pred.empty()) throw EmptyInput("macro_f1: no predictions");

  std::set<ClassId> classes;
  for (const auto& [truth, pred] : truth_pred) {
    if (truth != kUnknownLabel) classes.insert(truth);
    if (pred != kUnknownLabel) classes.insert(pred);
  }
  if (classes.empty()) return 0.0;

  double sum = 0.0;
  for (ClassId c : classes) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (const auto& [truth, pred] : truth_pred) {
      tp += truth == c && pred == c;
      fp += truth != c && pred == c;
      fn += truth == c && pred != c;
    }
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return sum / static_cast<double>(classes.size());
}

double vector_ratio(const EvmModel& model, std::int64_t training_points_seen) {
  const std::int64_t evs = model.total_evs();
  if (training_points_seen < evs) {
    throw CountMismatch("vector_ratio: " + std::to_string(evs) + " extreme vectors exceed " +
                        std::to_string(training_points_seen) + " training points");
  }
  return static_cast<double>(evs) / static_cast<double>(training_points_seen);
}

ProtocolReport run_open_set_protocol(const Dataset& train_data, const Dataset& test_data,
                                     int folds, int known_count, const HyperParams& hyper,
                                     DistanceMetric metric, std::uint64_t seed,
                                     unsigned threads) {
  if (folds < 1) throw InvalidArgument("run_open_set_protocol: folds must be >= 1");
  if (train_data.dim() != test_data.dim()) {
    throw DimensionMismatch("run_open_set_protocol: train and test dimensions differ");
  }
  const std::vector<ClassId> all_classes = train_data.class_ids();
  if (known_count < 2 || static_cast<std::size_t>(known_count) >= all_classes.size()) {
    throw InsufficientClasses("run_open_set_protocol: need 2 <= known_count < class count");
  }
  const int unknown_total = static_cast<int>(all_classes.size()) - known_count;

  ProtocolReport report;
  for (int fold = 0; fold < folds; ++fold) {
    Rng rng(seed, static_cast<std::uint64_t>(fold));
    std::vector<ClassId> shuffled = all_classes;
    rng.shuffle(shuffled);
    std::set<ClassId> known(shuffled.begin(), shuffled.begin() + known_count);
    const std::vector<ClassId> unknown_order(shuffled.begin() + known_count, shuffled.end());

    const Dataset train_fold = subset_of(train_data, known);
    const EvmModel model = train(train_fold, hyper, metric, threads);
    const std::int64_t point_count = train_fold.size();
    const double vr = vector_ratio(model, point_count);
    const std::int64_t ev_count = model.total_evs();

    // Raw probabilities for the full test set once; every openness step
    // reuses them with its own threshold.
    const std::vector<Prediction> raw = predict_many(model, test_data.features(), 0.0, threads);

    for (int u = 0; u <= unknown_total; ++u) {
      std::set<ClassId> eval_classes = known;
      eval_classes.insert(unknown_order.begin(), unknown_order.begin() + u);
      const double delta = dynamic_delta(
          {known_count, known_count, known_count + u});

      std::vector<std::pair<ClassId, ClassId>> pairs, pairs_no_reject;
      for (Index i = 0; i < test_data.size(); ++i) {
        const ClassId label = test_data.label(i);
        if (!eval_classes.count(label)) continue;
        const ClassId truth = known.count(label) ? label : kUnknownLabel;
        const auto& p = raw[static_cast<std::size_t>(i)];
        pairs.emplace_back(truth, decide(p, delta));
        pairs_no_reject.emplace_back(truth, decide(p, 0.0));
      }

      ProtocolRow row;
      row.fold = fold;
      row.step = u;
      row.unknown_classes = u;
      row.ev_count = ev_count;
      row.point_count = point_count;
      row.delta = delta;
      row.f1 = macro_f1(pairs);
      row.f1_no_reject = macro_f1(pairs_no_reject);
      row.accuracy = accuracy_of(pairs);
      row.vector_ratio = vr;
      report.rows.push_back(row);
    }
  }

  aggregate_by_step(report);
  return report;
}

ProtocolReport run_open_world_protocol(const std::vector<Dataset>& batches,
                                       const std::vector<Dataset>& unknown_pools,
                                       const HyperParams& hyper, DistanceMetric metric,
                                       const std::vector<Dataset>& tests, unsigned threads) {
  if (batches.empty()) throw EmptyInput("run_open_world_protocol: no training batches");
  const Index dim = batches.front().dim();
  for (const Dataset& d : batches) {
    if (d.dim() != dim) throw DimensionMismatch("run_open_world_protocol: batch dimensions differ");
  }
  for (const Dataset& d : unknown_pools) {
    if (d.dim() != dim) throw DimensionMismatch("run_open_world_protocol: pool dimensions differ");
  }
  for (const Dataset& d : tests) {
    if (d.dim() != dim) throw DimensionMismatch("run_open_world_protocol: test dimensions differ");
  }

  ProtocolReport report;
  EvmModel model;
  std::int64_t points_seen = 0;

  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (b == 0) {
      model = train(batches[0], hyper, metric, threads);
    } else {
      model = update(model, batches[b], threads);
    }
    points_seen += batches[b].size();

    // Known evaluation data: supplied test sets when given, otherwise the
    // training batches seen so far.
    const std::vector<Dataset>& known_source = tests.empty() ? batches : tests;
    std::vector<const Dataset*> eval_sets;
    for (std::size_t t = 0; t <= b && t < known_source.size(); ++t) {
      eval_sets.push_back(&known_source[t]);
    }

    const std::int64_t ev_count = model.total_evs();
    const double vr = vector_ratio(model, points_seen);

    for (std::size_t p = 0; p < unknown_pools.size(); ++p) {
      std::vector<std::pair<ClassId, ClassId>> pairs, pairs_no_reject;
      for (const Dataset* ds : eval_sets) {
        const std::vector<Prediction> preds =
            predict_many(model, ds->features(), 0.0, threads);
        for (Index i = 0; i < ds->size(); ++i) {
          const auto& pr = preds[static_cast<std::size_t>(i)];
          pairs.emplace_back(ds->label(i), decide(pr, hyper.delta));
          pairs_no_reject.emplace_back(ds->label(i), decide(pr, 0.0));
        }
      }
      const Dataset& pool = unknown_pools[p];
      if (pool.size() > 0) {
        const std::vector<Prediction> preds =
            predict_many(model, pool.features(), 0.0, threads);
        for (Index i = 0; i < pool.size(); ++i) {
          const auto& pr = preds[static_cast<std::size_t>(i)];
          pairs.emplace_back(kUnknownLabel, decide(pr, hyper.delta));
          pairs_no_reject.emplace_back(kUnknownLabel, decide(pr, 0.0));
        }
      }

      ProtocolRow row;
      row.fold = static_cast<int>(b);
      row.step = static_cast<int>(b);
      row.unknown_classes = static_cast<int>(pool.class_ids().size());
      row.ev_count = ev_count;
      row.point_count = points_seen;
      row.delta = hyper.delta;
      row.f1 = macro_f1(pairs);
      row.f1_no_reject = macro_f1(pairs_no_reject);
      row.accuracy = accuracy_of(pairs);
      row.vector_ratio = vr;
      report.rows.push_back(row);
    }
  }

  aggregate_by_step(report);
  return report;
}

double cross_class_validate_delta(const Dataset& train_data, int folds,
                                  const std::vector<double>& delta_grid,
                                  const HyperParams& hyper, DistanceMetric metric,
                                  unsigned threads) {
  if (delta_grid.empty()) throw EmptyInput("cross_class_validate_delta: empty delta grid");
  if (folds < 1) throw InvalidArgument("cross_class_validate_delta: folds must be >= 1");
  const std::vector<ClassId> classes = train_data.class_ids();
  if (static_cast<std::size_t>(folds) > classes.size()) {
    throw InsufficientClasses("cross_class_validate_delta: more folds than classes");
  }

  std::vector<double> mean_f1(delta_grid.size(), 0.0);
  for (int fold = 0; fold < folds; ++fold) {
    std::set<ClassId> known;
    std::set<ClassId> held_out;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      (static_cast<int>(c % static_cast<std::size_t>(folds)) == fold ? held_out : known)
          .insert(classes[c]);
    }
    if (known.size() < 2) {
      throw InsufficientClasses("cross_class_validate_delta: fold " + std::to_string(fold) +
                                " leaves fewer than 2 training classes");
    }

    const Dataset fold_train = subset_of(train_data, known);
    const EvmModel model = train(fold_train, hyper, metric, threads);
    const std::vector<Prediction> raw =
        predict_many(model, train_data.features(), 0.0, threads);

    for (std::size_t g = 0; g < delta_grid.size(); ++g) {
      std::vector<std::pair<ClassId, ClassId>> pairs;
      pairs.reserve(static_cast<std::size_t>(train_data.size()));
      for (Index i = 0; i < train_data.size(); ++i) {
        const ClassId label = train_data.label(i);
        const ClassId truth = known.count(label) ? label : kUnknownLabel;
        pairs.emplace_back(truth, decide(raw[static_cast<std::size_t>(i)], delta_grid[g]));
      }
      mean_f1[g] += macro_f1(pairs);
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < delta_grid.size(); ++g) {
    if (mean_f1[g] > mean_f1[best] ||
        (mean_f1[g] == mean_f1[best] && delta_grid[g] < delta_grid[best])) {
      best = g;
    }
  }
  return delta_grid[best];
}

}  // namespace evm::harness
