#include "evm/evm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "evm/distance.hpp"
#include "evm/parallel.hpp"
#include "evm/psi.hpp"
#include "evm/reduce.hpp"
#include "evm/weibull.hpp"

namespace evm {

namespace {

void accumulate(TrainStats* stats, const PsiFit& fit) {
  if (!stats) return;
  if (fit.degenerate) ++stats->degenerate_fits;
  if (!fit.converged) ++stats->unconverged_fits;
  stats->zeros_clamped += static_cast<std::size_t>(fit.zeros_clamped);
}

// Fits every anchor column against the shared negative pool, in parallel.
std::vector<PsiFit> fit_anchors(const Matrix& anchors, const Matrix& negatives, int tau,
                                DistanceMetric metric, ClassId class_id, unsigned threads) {
  std::vector<PsiFit> fits(static_cast<std::size_t>(anchors.cols()));
  parallel_for(fits.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        fits[i] = fit_psi_tolerant(anchors.col(static_cast<Index>(i)), negatives, tau, metric);
      } catch (const Error& e) {
        throw Error("class " + std::to_string(class_id) + ", anchor " + std::to_string(i) +
                    ": " + e.what());
      }
    }
  });
  return fits;
}

Matrix ev_matrix(const std::vector<PsiModel>& models, Index dim) {
  Matrix out(dim, static_cast<Index>(models.size()));
  for (std::size_t i = 0; i < models.size(); ++i) {
    out.col(static_cast<Index>(i)) = models[i].ev;
  }
  return out;
}

Matrix concat_columns(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

EvmModel train(const Dataset& data, const HyperParams& hyper, DistanceMetric metric,
               unsigned threads, TrainStats* stats) {
  hyper.validate();
  const std::vector<ClassId> ids = data.class_ids();
  if (ids.size() < 2) {
    throw SingleClassDataset("train: need at least two classes, got " +
                             std::to_string(ids.size()));
  }

  std::map<ClassId, std::vector<PsiModel>> classes;
  for (ClassId id : ids) {
    const std::vector<Index> pos_idx = data.indices_of(id);
    std::vector<Index> neg_idx;
    neg_idx.reserve(static_cast<std::size_t>(data.size()) - pos_idx.size());
    for (Index i = 0; i < data.size(); ++i) {
      if (data.label(i) != id) neg_idx.push_back(i);
    }

    const Matrix anchors = data.columns(pos_idx);
    const Matrix negatives = data.columns(neg_idx);
    const std::vector<PsiFit> fits =
        fit_anchors(anchors, negatives, hyper.tau, metric, id, threads);

    std::vector<PsiModel> models;
    models.reserve(fits.size());
    for (const PsiFit& f : fits) {
      accumulate(stats, f);
      models.push_back(f.model);
    }
    classes[id] = reduce_class(models, anchors, hyper.sigma, metric);
  }

  return EvmModel(std::move(classes), metric, hyper, data.dim());
}

double class_probability(const EvmModel& model, const Eigen::Ref<const Vector>& query,
                         ClassId class_id) {
  const auto it = model.classes.find(class_id);
  if (it == model.classes.end()) {
    throw UnknownClassId("class_probability: no class " + std::to_string(class_id));
  }
  if (query.size() != model.dim) {
    throw DimensionMismatch("class_probability: query dimension " + std::to_string(query.size()) +
                            ", model dimension " + std::to_string(model.dim));
  }

  const std::vector<PsiModel>& evs = it->second;
  std::vector<double> psi;
  psi.reserve(evs.size());
  for (const PsiModel& m : evs) {
    psi.push_back(weibull_survival(distance(m.ev, query, model.metric), m.kappa, m.lambda));
  }

  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(model.hyper.k), psi.size());
  std::partial_sort(psi.begin(), psi.begin() + static_cast<std::ptrdiff_t>(k), psi.end(),
                    std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += psi[i];
  return sum / static_cast<double>(k);
}

Prediction predict(const EvmModel& model, const Eigen::Ref<const Vector>& query, double delta) {
  Prediction p;
  ClassId best = kUnknownLabel;
  double best_prob = -1.0;
  for (const auto& [id, evs] : model.classes) {
    const double prob = class_probability(model, query, id);
    p.per_class[id] = prob;
    if (prob > best_prob) {
      best_prob = prob;
      best = id;
    }
  }
  p.label = (best != kUnknownLabel && best_prob >= delta) ? best : kUnknownLabel;
  return p;
}

Prediction predict(const EvmModel& model, const Eigen::Ref<const Vector>& query) {
  return predict(model, query, model.hyper.delta);
}

std::vector<Prediction> predict_many(const EvmModel& model,
                                     const Eigen::Ref<const Matrix>& queries, double delta,
                                     unsigned threads) {
  std::vector<Prediction> out(static_cast<std::size_t>(queries.cols()));
  parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = predict(model, queries.col(static_cast<Index>(i)), delta);
    }
  });
  return out;
}

EvmModel update(const EvmModel& model, const Dataset& batch, unsigned threads,
                TrainStats* stats) {
  model.validate();
  if (batch.size() == 0) return model;
  if (batch.dim() != model.dim) {
    throw DimensionMismatch("update: batch dimension " + std::to_string(batch.dim()) +
                            ", model dimension " + std::to_string(model.dim));
  }

  const HyperParams& hyper = model.hyper;
  const DistanceMetric metric = model.metric;

  std::vector<ClassId> all_ids;
  for (const auto& [id, evs] : model.classes) all_ids.push_back(id);
  for (ClassId id : batch.class_ids()) {
    if (!model.classes.count(id)) all_ids.push_back(id);
  }
  std::sort(all_ids.begin(), all_ids.end());

  std::map<ClassId, std::vector<PsiModel>> next_classes;
  for (ClassId id : all_ids) {
    // Negative pool: every other class's current EVs plus its batch points.
    Index n_other_evs = 0;
    for (const auto& [other, evs] : model.classes) {
      if (other != id) n_other_evs += static_cast<Index>(evs.size());
    }
    Matrix other_evs(model.dim, n_other_evs);
    Index col = 0;
    for (const auto& [other, evs] : model.classes) {
      if (other == id) continue;
      for (const PsiModel& m : evs) other_evs.col(col++) = m.ev;
    }

    std::vector<Index> own_idx, other_idx;
    for (Index i = 0; i < batch.size(); ++i) {
      (batch.label(i) == id ? own_idx : other_idx).push_back(i);
    }
    const Matrix batch_own = batch.columns(own_idx);
    const Matrix batch_other = batch.columns(other_idx);
    const Matrix pool = concat_columns(other_evs, batch_other);

    static const std::vector<PsiModel> kNoEvs;
    const auto existing_it = model.classes.find(id);
    const bool has_existing = existing_it != model.classes.end();
    const std::vector<PsiModel>& old_evs = has_existing ? existing_it->second : kNoEvs;

    // An existing EV is refit only when some batch point lands inside its
    // current tau-nearest-negative tail.
    std::vector<char> refit(old_evs.size(), 0);
    if (batch_other.cols() > 0) {
      for (std::size_t e = 0; e < old_evs.size(); ++e) {
        double cutoff = std::numeric_limits<double>::infinity();
        if (other_evs.cols() >= hyper.tau) {
          const Vector margins =
              nearest_negative_margins(old_evs[e].ev, other_evs, hyper.tau, metric);
          cutoff = margins[margins.size() - 1];
        }
        const double closest_new =
            distances_to_all(old_evs[e].ev, batch_other, metric).minCoeff() / 2.0;
        refit[e] = closest_new < cutoff;
      }
    }
    const bool any_refit = std::any_of(refit.begin(), refit.end(), [](char c) { return c != 0; });
    const bool affected = any_refit || batch_own.cols() > 0;

    if (!affected) {
      if (has_existing) next_classes[id] = old_evs;
      continue;
    }

    std::vector<PsiModel> models;
    models.reserve(old_evs.size() + static_cast<std::size_t>(batch_own.cols()));
    for (std::size_t e = 0; e < old_evs.size(); ++e) {
      if (refit[e]) {
        if (stats) ++stats->refit_evs;
        PsiFit f = fit_psi_tolerant(old_evs[e].ev, pool, hyper.tau, metric);
        accumulate(stats, f);
        models.push_back(std::move(f.model));
      } else {
        models.push_back(old_evs[e]);
      }
    }
    if (batch_own.cols() > 0) {
      const std::vector<PsiFit> fits =
          fit_anchors(batch_own, pool, hyper.tau, metric, id, threads);
      for (const PsiFit& f : fits) {
        accumulate(stats, f);
        models.push_back(f.model);
      }
    }

    const Matrix points = concat_columns(ev_matrix(old_evs, model.dim), batch_own);
    next_classes[id] = reduce_class(models, points, hyper.sigma, metric);
  }

  return EvmModel(std::move(next_classes), metric, hyper, model.dim);
}

}  // namespace evm
