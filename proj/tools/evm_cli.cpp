// Command-line front end: train, predict, update, reduce and protocol runs.
// Human-readable logging goes to stderr; stdout carries only machine-readable
// tab-separated results.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evm/evm.hpp"
#include "evm/harness.hpp"
#include "evm/io.hpp"
#include "evm/parallel.hpp"
#include "evm/reduce.hpp"
#include "evm/types.hpp"

namespace {

using evm::ClassId;
using evm::Dataset;
using evm::DistanceMetric;
using evm::EvmModel;
using evm::HyperParams;

DistanceMetric parse_metric(const std::string& name) {
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  if (name == "cosine") return DistanceMetric::kCosine;
  throw evm::InvalidArgument("unknown metric '" + name + "' (euclidean|cosine)");
}

evm::io::LabelColumn parse_label_column(const std::string& name) {
  if (name == "first") return evm::io::LabelColumn::kFirst;
  if (name == "last") return evm::io::LabelColumn::kLast;
  throw evm::InvalidArgument("unknown label column '" + name + "' (first|last)");
}

evm::io::LabeledDataset load_file(const std::string& path, bool sparse,
                                  const std::string& label_column) {
  return sparse ? evm::io::load_sparse(path)
                : evm::io::load_dense_csv(path, parse_label_column(label_column));
}

// Sparse files define their dimensionality by the largest index present;
// pad with implicit zeros when a model expects more trailing features.
Dataset pad_to_dim(const Dataset& data, evm::Index dim) {
  if (data.dim() >= dim) return data;
  evm::Matrix padded = evm::Matrix::Zero(dim, data.size());
  padded.topRows(data.dim()) = data.features();
  return Dataset(std::move(padded), data.labels());
}

// Re-interns a freshly loaded dataset against the accumulated name table so
// ids stay stable across files and against a loaded model.
Dataset remap_labels(const evm::io::LabeledDataset& loaded,
                     std::map<std::string, ClassId>& ids_by_name,
                     std::map<ClassId, std::string>& names_by_id) {
  std::vector<ClassId> labels;
  labels.reserve(loaded.data.labels().size());
  for (ClassId old : loaded.data.labels()) {
    const std::string& name = loaded.class_names.at(old);
    ClassId id;
    const auto it = ids_by_name.find(name);
    if (it != ids_by_name.end()) {
      id = it->second;
    } else {
      id = names_by_id.empty() ? 0 : names_by_id.rbegin()->first + 1;
      ids_by_name.emplace(name, id);
      names_by_id.emplace(id, name);
    }
    labels.push_back(id);
  }
  return Dataset(loaded.data.features(), std::move(labels));
}

void print_class_counts(const EvmModel& model, const std::map<ClassId, std::string>& names) {
  for (const auto& [id, evs] : model.classes) {
    const auto it = names.find(id);
    const std::string name = it != names.end() ? it->second : std::to_string(id);
    std::printf("class\t%s\t%zu\n", name.c_str(), evs.size());
  }
  std::printf("total_evs\t%lld\n", static_cast<long long>(model.total_evs()));
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw evm::FileError("cannot open config '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string config_get(const std::map<std::string, std::string>& kv, const std::string& key,
                       const std::string& fallback) {
  const auto it = kv.find(key);
  return it != kv.end() ? it->second : fallback;
}

struct TrainArgs {
  std::string data, out, metric = "euclidean", label_column = "first";
  int tau = 75, k = 4;
  double sigma = 0.5, delta = 0.0;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool sparse = false;
};

struct PredictArgs {
  std::string model, data, label_column = "first";
  double delta = -1.0;  // <0: use the stored threshold
  unsigned threads = 0;
  bool sparse = false;
};

struct UpdateArgs {
  std::string model, data, out, label_column = "first";
  unsigned threads = 0;
  bool sparse = false;
};

struct ReduceArgs {
  std::string model, out;
  int budget = 0;
};

struct ProtocolArgs {
  std::string mode, config;
};

int run_train(const TrainArgs& a) {
  const auto loaded = load_file(a.data, a.sparse, a.label_column);
  const HyperParams hyper(a.tau, a.k, a.sigma, a.delta);
  evm::TrainStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  const EvmModel model = evm::train(loaded.data, hyper, parse_metric(a.metric), a.threads, &stats);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  evm::io::save_model(model, loaded.class_names, a.out);

  std::fprintf(stderr, "trained %zu classes on %lld points (%lld dims) in %lld ms\n",
               model.classes.size(), static_cast<long long>(loaded.data.size()),
               static_cast<long long>(loaded.data.dim()), static_cast<long long>(ms));
  std::fprintf(stderr, "fits: degenerate=%zu unconverged=%zu zero_margins=%zu\n",
               stats.degenerate_fits, stats.unconverged_fits, stats.zeros_clamped);
  print_class_counts(model, loaded.class_names);
  std::printf("points\t%lld\n", static_cast<long long>(loaded.data.size()));
  std::printf("vector_ratio\t%.2f\n", evm::harness::vector_ratio(model, loaded.data.size()));
  return 0;
}

int run_predict(const PredictArgs& a) {
  const evm::io::LoadedModel lm = evm::io::load_model(a.model);
  const auto loaded = load_file(a.data, a.sparse, a.label_column);
  const Dataset queries =
      a.sparse ? pad_to_dim(loaded.data, lm.model.dim) : loaded.data;
  if (queries.dim() != lm.model.dim) {
    throw evm::DimensionMismatch("query dimension " + std::to_string(queries.dim()) +
                                 ", model dimension " + std::to_string(lm.model.dim));
  }
  const double delta = a.delta >= 0.0 ? a.delta : lm.model.hyper.delta;
  const auto preds = evm::predict_many(lm.model, queries.features(), delta, a.threads);

  std::string header = "index";
  for (const auto& [id, name] : lm.class_names) header += "\t" + name;
  header += "\tlabel";
  std::printf("%s\n", header.c_str());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::string row = std::to_string(i);
    char buf[32];
    for (const auto& [id, prob] : preds[i].per_class) {
      std::snprintf(buf, sizeof buf, "\t%.6f", prob);
      row += buf;
    }
    if (preds[i].label == evm::kUnknownLabel) {
      row += "\tUNKNOWN";
    } else {
      row += "\t" + lm.class_names.at(preds[i].label);
    }
    std::printf("%s\n", row.c_str());
  }
  return 0;
}

int run_update(const UpdateArgs& a) {
  evm::io::LoadedModel lm = evm::io::load_model(a.model);
  auto loaded = load_file(a.data, a.sparse, a.label_column);
  if (a.sparse) loaded.data = pad_to_dim(loaded.data, lm.model.dim);

  std::map<std::string, ClassId> ids_by_name;
  for (const auto& [id, name] : lm.class_names) ids_by_name.emplace(name, id);
  const Dataset batch = remap_labels(loaded, ids_by_name, lm.class_names);

  evm::TrainStats stats;
  const EvmModel next = evm::update(lm.model, batch, a.threads, &stats);
  evm::io::save_model(next, lm.class_names, a.out);

  std::fprintf(stderr, "updated with %lld points; refit_evs=%zu degenerate=%zu unconverged=%zu\n",
               static_cast<long long>(batch.size()), stats.refit_evs, stats.degenerate_fits,
               stats.unconverged_fits);
  print_class_counts(next, lm.class_names);
  return 0;
}

int run_reduce(const ReduceArgs& a) {
  const evm::io::LoadedModel lm = evm::io::load_model(a.model);
  const EvmModel& model = lm.model;
  const long long total = model.total_evs();
  if (a.budget < 1) throw evm::BudgetZero("reduce: budget must be >= 1");

  if (a.budget >= total) {
    evm::io::save_model(model, lm.class_names, a.out);
    std::fprintf(stderr, "budget %d >= %lld extreme vectors, model unchanged\n", a.budget, total);
    print_class_counts(model, lm.class_names);
    return 0;
  }

  // Split the total budget across classes by largest remainder, one EV floor.
  struct Share {
    ClassId id;
    long long evs;
    long long quota;
    double remainder;
  };
  std::vector<Share> shares;
  for (const auto& [id, evs] : model.classes) {
    const double exact =
        static_cast<double>(a.budget) * static_cast<double>(evs.size()) / static_cast<double>(total);
    Share s;
    s.id = id;
    s.evs = static_cast<long long>(evs.size());
    s.quota = std::max<long long>(1, static_cast<long long>(exact));
    s.remainder = exact - static_cast<double>(s.quota);
    shares.push_back(s);
  }
  long long assigned = 0;
  for (const Share& s : shares) assigned += s.quota;
  std::sort(shares.begin(), shares.end(), [](const Share& x, const Share& y) {
    return x.remainder > y.remainder || (x.remainder == y.remainder && x.id < y.id);
  });
  for (std::size_t i = 0; assigned < a.budget && i < shares.size(); ++i) {
    if (shares[i].quota < shares[i].evs) {
      ++shares[i].quota;
      ++assigned;
    }
  }

  std::map<ClassId, std::vector<evm::PsiModel>> reduced;
  for (const Share& s : shares) {
    const auto& evs = model.classes.at(s.id);
    evm::Matrix points(model.dim, static_cast<evm::Index>(evs.size()));
    for (std::size_t i = 0; i < evs.size(); ++i) {
      points.col(static_cast<evm::Index>(i)) = evs[i].ev;
    }
    const auto result = evm::reduce_budgeted(evs, points, static_cast<int>(s.quota), model.metric);
    reduced[s.id] = result.models;
    std::fprintf(stderr, "class %lld: %zu -> %zu EVs (sigma %.4f)\n",
                 static_cast<long long>(s.id), evs.size(), result.models.size(),
                 result.sigma_used);
  }

  const EvmModel next(std::move(reduced), model.metric, model.hyper, model.dim);
  evm::io::save_model(next, lm.class_names, a.out);
  print_class_counts(next, lm.class_names);
  return 0;
}

int run_protocol(const ProtocolArgs& a) {
  const auto kv = read_config(a.config);
  const bool sparse = config_get(kv, "sparse", "0") == "1";
  const std::string label_column = config_get(kv, "label_column", "first");
  const DistanceMetric metric = parse_metric(config_get(kv, "metric", "euclidean"));
  const HyperParams hyper(std::stoi(config_get(kv, "tau", "75")),
                          std::stoi(config_get(kv, "k", "4")),
                          std::stod(config_get(kv, "sigma", "0.5")),
                          std::stod(config_get(kv, "delta", "0")));
  const unsigned threads = static_cast<unsigned>(std::stoul(config_get(kv, "threads", "0")));
  const std::string out_path = config_get(kv, "out", "");

  std::map<std::string, ClassId> ids_by_name;
  std::map<ClassId, std::string> names_by_id;
  auto load = [&](const std::string& path) {
    return remap_labels(load_file(path, sparse, label_column), ids_by_name, names_by_id);
  };

  evm::harness::ProtocolReport report;
  if (a.mode == "openset") {
    const std::string train_path = config_get(kv, "train", config_get(kv, "data", ""));
    if (train_path.empty()) throw evm::InvalidArgument("openset config needs train=PATH");
    const Dataset train_all = load(train_path);

    Dataset train_part = train_all;
    Dataset test_part = train_all;
    const std::string test_path = config_get(kv, "test", "");
    if (!test_path.empty()) {
      test_part = load(test_path);
    } else {
      const double fraction = std::stod(config_get(kv, "split_fraction", "0.8"));
      if (!(fraction > 0.0 && fraction < 1.0)) {
        throw evm::InvalidArgument("split_fraction must lie in (0, 1)");
      }
      const evm::Index n_train =
          static_cast<evm::Index>(fraction * static_cast<double>(train_all.size()));
      std::vector<evm::Index> head(static_cast<std::size_t>(n_train));
      std::vector<evm::Index> tail(static_cast<std::size_t>(train_all.size() - n_train));
      for (evm::Index i = 0; i < train_all.size(); ++i) {
        if (i < n_train) {
          head[static_cast<std::size_t>(i)] = i;
        } else {
          tail[static_cast<std::size_t>(i - n_train)] = i;
        }
      }
      std::vector<ClassId> head_labels, tail_labels;
      for (evm::Index i : head) head_labels.push_back(train_all.label(i));
      for (evm::Index i : tail) tail_labels.push_back(train_all.label(i));
      train_part = Dataset(train_all.columns(head), std::move(head_labels));
      test_part = Dataset(train_all.columns(tail), std::move(tail_labels));
    }

    report = evm::harness::run_open_set_protocol(
        train_part, test_part, std::stoi(config_get(kv, "folds", "20")),
        std::stoi(config_get(kv, "known", "15")), hyper, metric,
        std::stoull(config_get(kv, "seed", "0")), threads);
  } else if (a.mode == "openworld") {
    std::vector<Dataset> batches, pools, tests;
    for (const std::string& p : split_list(config_get(kv, "batches", ""))) {
      batches.push_back(load(p));
    }
    for (const std::string& p : split_list(config_get(kv, "unknowns", ""))) {
      pools.push_back(load(p));
    }
    for (const std::string& p : split_list(config_get(kv, "tests", ""))) {
      tests.push_back(load(p));
    }
    if (batches.empty()) throw evm::InvalidArgument("openworld config needs batches=P1,P2,...");
    if (pools.empty()) pools.push_back(Dataset::empty(batches.front().dim()));

    HyperParams run_hyper = hyper;
    const std::string grid_csv = config_get(kv, "delta_grid", "");
    if (!grid_csv.empty()) {
      std::vector<double> grid;
      for (const std::string& g : split_list(grid_csv)) grid.push_back(std::stod(g));
      const int delta_folds = std::stoi(config_get(kv, "delta_folds", "3"));
      run_hyper.delta = evm::harness::cross_class_validate_delta(batches.front(), delta_folds,
                                                                 grid, hyper, metric, threads);
      std::fprintf(stderr, "cross-class validation selected delta=%.4f\n", run_hyper.delta);
    }
    report =
        evm::harness::run_open_world_protocol(batches, pools, run_hyper, metric, tests, threads);
  } else {
    throw evm::InvalidArgument("unknown protocol mode '" + a.mode + "' (openset|openworld)");
  }

  if (out_path.empty()) {
    evm::io::write_report_tsv(report, std::cout);
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw evm::FileError("cannot open '" + out_path + "' for writing");
    evm::io::write_report_tsv(report, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extreme Value Machine: open-set training, prediction and evaluation"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Fit an EVM and write a model file");
  train_cmd->add_option("--data", train_args.data, "training data path")->required();
  train_cmd->add_option("--out", train_args.out, "output model path")->required();
  train_cmd->add_option("--tau", train_args.tau, "Weibull tail size");
  train_cmd->add_option("--k", train_args.k, "top probabilities averaged per class");
  train_cmd->add_option("--sigma", train_args.sigma, "coverage threshold in (0,1]");
  train_cmd->add_option("--delta", train_args.delta, "rejection threshold in [0,1)");
  train_cmd->add_option("--metric", train_args.metric, "euclidean|cosine");
  train_cmd->add_option("--threads", train_args.threads, "worker threads (0 = auto)");
  train_cmd->add_option("--seed", train_args.seed, "reserved for compatibility; training is deterministic");
  train_cmd->add_option("--label-column", train_args.label_column, "first|last");
  train_cmd->add_flag("--sparse", train_args.sparse, "input is sparse idx:val text");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Classify samples with a saved model");
  predict_cmd->add_option("--model", predict_args.model, "model path")->required();
  predict_cmd->add_option("--data", predict_args.data, "query data path")->required();
  predict_cmd->add_option("--delta", predict_args.delta, "override the stored rejection threshold");
  predict_cmd->add_option("--threads", predict_args.threads, "worker threads (0 = auto)");
  predict_cmd->add_option("--label-column", predict_args.label_column, "first|last");
  predict_cmd->add_flag("--sparse", predict_args.sparse, "input is sparse idx:val text");

  UpdateArgs update_args;
  auto* update_cmd = app.add_subcommand("update", "Add a batch of data to a saved model");
  update_cmd->add_option("--model", update_args.model, "input model path")->required();
  update_cmd->add_option("--data", update_args.data, "batch data path")->required();
  update_cmd->add_option("--out", update_args.out, "output model path")->required();
  update_cmd->add_option("--threads", update_args.threads, "worker threads (0 = auto)");
  update_cmd->add_option("--label-column", update_args.label_column, "first|last");
  update_cmd->add_flag("--sparse", update_args.sparse, "input is sparse idx:val text");

  ReduceArgs reduce_args;
  auto* reduce_cmd = app.add_subcommand("reduce", "Shrink a saved model to an EV budget");
  reduce_cmd->add_option("--model", reduce_args.model, "input model path")->required();
  reduce_cmd->add_option("--budget", reduce_args.budget, "total extreme-vector budget")->required();
  reduce_cmd->add_option("--out", reduce_args.out, "output model path")->required();

  ProtocolArgs protocol_args;
  auto* protocol_cmd = app.add_subcommand("protocol", "Run an evaluation protocol from a config");
  protocol_cmd->add_option("--mode", protocol_args.mode, "openset|openworld")->required();
  protocol_cmd->add_option("--config", protocol_args.config, "key=value config path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_args);
    if (predict_cmd->parsed()) return run_predict(predict_args);
    if (update_cmd->parsed()) return run_update(update_args);
    if (reduce_cmd->parsed()) return run_reduce(reduce_args);
    if (protocol_cmd->parsed()) return run_protocol(protocol_args);
  } catch (const evm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
