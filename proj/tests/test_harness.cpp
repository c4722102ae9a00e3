#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "evm/harness.hpp"
#include "evm/rng.hpp"
#include "testutil.hpp"

using namespace evm;
using namespace evm::harness;
using testutil::vec;

namespace {

using Pairs = std::vector<std::pair<ClassId, ClassId>>;

Dataset separated_blobs(int classes, Index per_class, std::uint64_t seed, double spacing = 20.0) {
  Rng rng(seed);
  std::vector<Vector> centers;
  for (int c = 0; c < classes; ++c) {
    centers.push_back(vec({spacing * (c % 4), spacing * (c / 4)}));
  }
  return testutil::blob_dataset(centers, 1.0, per_class, rng);
}

}  // namespace

TEST_CASE("dynamic delta formula") {
  CHECK(dynamic_delta({15, 15, 15}) == 0.0);
  CHECK(dynamic_delta({10, 10, 10}) == 0.0);
  CHECK(dynamic_delta({15, 15, 26}) ==
        doctest::Approx(0.5 * (1.0 - std::sqrt(30.0 / 41.0))).epsilon(1e-12));
  CHECK(dynamic_delta({15, 15, 26}) == doctest::Approx(0.0723).epsilon(1e-2));
  CHECK_THROWS_AS(dynamic_delta({20, 10, 10}), InvalidOpenness);
  CHECK_THROWS_AS(dynamic_delta({0, 0, 0}), InvalidArgument);
}

TEST_CASE("macro F1 basics") {
  CHECK_THROWS_AS(macro_f1({}), EmptyInput);

  Pairs all_correct = {{0, 0}, {1, 1}, {2, 2}, {0, 0}};
  CHECK(macro_f1(all_correct) == doctest::Approx(1.0));

  Pairs all_rejected = {{0, kUnknownLabel}, {1, kUnknownLabel}, {2, kUnknownLabel}};
  CHECK(macro_f1(all_rejected) == doctest::Approx(0.0));
}

TEST_CASE("macro F1 equals a hand-computed confusion matrix") {
  // Three classes; UNKNOWN appears as both truth and outcome.
  const Pairs pairs = {
      {0, 0}, {0, 0}, {0, 1},              // class 0: tp=2 fn=1
      {1, 1}, {1, kUnknownLabel},          // class 1: tp=1 fn=1 (+fp=1 from above)
      {2, 2}, {2, 2}, {2, 0},              // class 2: tp=2 fn=1
      {kUnknownLabel, kUnknownLabel},      // correctly rejected
      {kUnknownLabel, 2},                  // false accept into class 2
  };
  // class 0: P = 2/3, R = 2/3, F1 = 2/3
  // class 1: P = 1/2, R = 1/2, F1 = 1/2
  // class 2: P = 2/3, R = 2/3, F1 = 2/3
  const double expected = (2.0 / 3.0 + 0.5 + 2.0 / 3.0) / 3.0;
  CHECK(macro_f1(pairs) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("macro F1 is permutation-invariant") {
  Rng rng(55);
  Pairs pairs;
  for (int i = 0; i < 200; ++i) {
    const auto truth = static_cast<ClassId>(rng.bounded(4)) - 1;  // includes UNKNOWN
    const auto pred = static_cast<ClassId>(rng.bounded(4)) - 1;
    pairs.emplace_back(truth, pred);
  }
  const double base = macro_f1(pairs);
  rng.shuffle(pairs);
  CHECK(macro_f1(pairs) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("vector ratio reproduces the published table values") {
  std::map<ClassId, std::vector<PsiModel>> classes;
  classes[0] = std::vector<PsiModel>(16309, PsiModel(vec({0.0}), 1.0, 1.0));
  EvmModel model(std::move(classes), DistanceMetric::kEuclidean, HyperParams(2, 1, 0.5, 0.0), 1);
  CHECK(vector_ratio(model, 64817) == doctest::Approx(0.2516).epsilon(1e-3));

  model.classes[0].resize(74845, PsiModel(vec({0.0}), 1.0, 1.0));
  CHECK(vector_ratio(model, 255224) == doctest::Approx(0.2933).epsilon(1e-3));

  model.classes[0].resize(100, PsiModel(vec({0.0}), 1.0, 1.0));
  CHECK(vector_ratio(model, 100) == 1.0);
  CHECK_THROWS_AS(vector_ratio(model, 99), CountMismatch);
}

TEST_CASE("open-set protocol: structure, closed-set F1, trend") {
  const Dataset train_data = separated_blobs(6, 30, 1234);
  const Dataset test_data = separated_blobs(6, 10, 4321);
  const HyperParams hyper(8, 2, 0.5, 0.0);

  const int folds = 4, known = 4;
  const ProtocolReport report = run_open_set_protocol(train_data, test_data, folds, known,
                                                      hyper, DistanceMetric::kEuclidean, 9);

  // folds x (unknown steps + closed-set step) rows.
  const int steps = 6 - known + 1;
  CHECK(report.rows.size() == static_cast<std::size_t>(folds * steps));
  CHECK(report.aggregates.size() == static_cast<std::size_t>(steps));

  for (const ProtocolRow& row : report.rows) {
    if (row.step == 0) {
      // Closed set: delta = 0 and separable blobs classify perfectly.
      CHECK(row.delta == 0.0);
      CHECK(row.f1 == doctest::Approx(1.0));
      CHECK(row.accuracy == doctest::Approx(1.0));
    }
    CHECK(row.vector_ratio <= 1.0);
    CHECK(row.f1 >= 0.0);
    CHECK(row.f1 <= 1.0);
  }

  // With rejection disabled, adding unknowns can only hurt accuracy; the
  // dynamic threshold recovers most of it on well-separated data.
  for (int fold = 0; fold < folds; ++fold) {
    double prev_acc_no_reject = 1.0;
    for (const ProtocolRow& row : report.rows) {
      if (row.fold != fold) continue;
      if (row.step > 0) {
        CHECK(row.f1_no_reject <= prev_acc_no_reject + 1e-12);
        CHECK(row.f1 >= row.f1_no_reject - 1e-12);
      }
      prev_acc_no_reject = row.f1_no_reject;
    }
  }
}

TEST_CASE("open-set protocol is reproducible for the same seed") {
  const Dataset train_data = separated_blobs(5, 20, 22);
  const Dataset test_data = separated_blobs(5, 8, 23);
  const HyperParams hyper(6, 1, 0.5, 0.0);
  const auto a =
      run_open_set_protocol(train_data, test_data, 3, 3, hyper, DistanceMetric::kEuclidean, 7);
  const auto b =
      run_open_set_protocol(train_data, test_data, 3, 3, hyper, DistanceMetric::kEuclidean, 7);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].f1 == b.rows[i].f1);
    CHECK(a.rows[i].accuracy == b.rows[i].accuracy);
    CHECK(a.rows[i].delta == b.rows[i].delta);
  }
  CHECK_THROWS_AS(
      run_open_set_protocol(train_data, test_data, 3, 5, hyper, DistanceMetric::kEuclidean, 7),
      InsufficientClasses);
}

TEST_CASE("open-world protocol: structure and closed-set degeneration") {
  Rng rng(66);
  std::vector<Dataset> batches;
  batches.push_back(testutil::blob_dataset({vec({0, 0}), vec({15, 0})}, 1.0, 20, rng));
  {
    const Matrix blob = testutil::gaussian_blob(vec({0, 15}), 1.0, 20, rng);
    batches.push_back(Dataset(blob, std::vector<ClassId>(20, 2)));
  }

  std::vector<Dataset> pools;
  pools.push_back(Dataset::empty(2));
  {
    const Matrix blob = testutil::gaussian_blob(vec({40, 40}), 1.0, 15, rng);
    pools.push_back(Dataset(blob, std::vector<ClassId>(15, 0)));
  }

  const HyperParams hyper(6, 2, 0.5, 0.1);
  const ProtocolReport report =
      run_open_world_protocol(batches, pools, hyper, DistanceMetric::kEuclidean);
  CHECK(report.rows.size() == batches.size() * pools.size());

  // Single batch, empty pool row reduces to closed-set evaluation on the
  // training data (resubstitution on separable blobs is perfect).
  const ProtocolRow& first = report.rows.front();
  CHECK(first.step == 0);
  CHECK(first.unknown_classes == 0);
  CHECK(first.f1 == doctest::Approx(1.0));

  // Vector ratio accounts cumulative points.
  CHECK(report.rows.back().point_count == 60);
}

TEST_CASE("cross-class validation picks a helpful delta deterministically") {
  const Dataset train_data = separated_blobs(6, 25, 77);
  const HyperParams hyper(8, 2, 0.5, 0.0);

  const std::vector<double> single = {0.15};
  CHECK(cross_class_validate_delta(train_data, 3, single, hyper, DistanceMetric::kEuclidean) ==
        0.15);

  const std::vector<double> grid = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  const double chosen =
      cross_class_validate_delta(train_data, 3, grid, hyper, DistanceMetric::kEuclidean);
  // Held-out blobs are far from the trained ones, so some rejection must win.
  CHECK(chosen > 0.0);

  std::vector<double> permuted = {0.3, 0.15, 0.05, 0.25, 0.1, 0.2};
  CHECK(cross_class_validate_delta(train_data, 3, permuted, hyper, DistanceMetric::kEuclidean) ==
        chosen);

  CHECK_THROWS_AS(cross_class_validate_delta(train_data, 3, {}, hyper,
                                             DistanceMetric::kEuclidean),
                  EmptyInput);
  CHECK_THROWS_AS(cross_class_validate_delta(train_data, 7, grid, hyper,
                                             DistanceMetric::kEuclidean),
                  InsufficientClasses);
}
