#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "dynsleuth/shadow_inference.hpp"

using namespace dynsleuth;
using namespace dynsleuth::shadow;

namespace {

ShadowRow make_row(std::vector<double> features, int label, int seed, bool train) {
  ShadowRow row;
  row.features.values = std::move(features);
  row.label = label;
  row.seed_index = seed;
  row.is_train = train;
  return row;
}

// Two cleanly separated 2-d blobs.
std::vector<ShadowRow> blob_rows() {
  std::vector<ShadowRow> rows;
  RngStream rng(12);
  for (int i = 0; i < 40; ++i) {
    const double jx = rng.uniform_real(-0.5, 0.5), jy = rng.uniform_real(-0.5, 0.5);
    rows.push_back(make_row({5.0 + jx, 5.0 + jy}, 0, i, true));
    rows.push_back(make_row({-5.0 + jx, -5.0 + jy}, 1, i, true));
  }
  return rows;
}

Policy constant_policy(double value) {
  Policy p;
  p.head = PolicyHead::Gaussian;
  p.input_contract = "pointbot3";
  p.params.dims = {3, 1};
  p.params.weights = {{0.0, 0.0, value}};  // bias input is the constant 1
  p.params.biases = {{0.0}};
  p.log_std = -12.0;  // sampling noise far below double display precision
  return p;
}

}  // namespace

TEST_CASE("features of a deterministic policy on pointbot have zero variance") {
  const envs::CandidateSet set = envs::builtin_candidate_set("pointbot6");
  const ShadowTrainConfig cfg;
  const Policy policy = constant_policy(0.8);
  const FeatureVector f = extract_features(policy, set, 5, 42, cfg);
  REQUIRE(f.values.size() == 12);  // 2N layout
  for (int i = 0; i < 6; ++i) {
    CHECK(f.values[2 * i + 1] == doctest::Approx(0.0).epsilon(1e-12));
  }

  // Independent recomputation: with no stochasticity every trial return is the
  // single-trial return, so the mean must match a one-trial evaluation.
  for (int i = 0; i < 6; ++i) {
    auto env = envs::make_env(set.candidates[i]);
    const train::RewardStats one = train::evaluate_policy(policy, *env, 1, 7);
    CHECK(f.values[2 * i] == doctest::Approx(one.returns[0]).epsilon(1e-9));
  }

  CHECK(extract_features(policy, set, 5, 42, cfg) == f);  // deterministic
  CHECK_THROWS_AS(extract_features(policy, set, 0, 42, cfg), std::invalid_argument);
}

TEST_CASE("svm separates clean blobs perfectly") {
  const std::vector<ShadowRow> rows = blob_rows();
  const LinearSvmModel model = fit_classifier(rows, 2, SvmConfig{});
  for (const ShadowRow& row : rows) {
    CHECK(infer_candidate(model, row.features).first == row.label);
  }
}

TEST_CASE("duplicating every row leaves the decision function unchanged") {
  const std::vector<ShadowRow> rows = blob_rows();
  std::vector<ShadowRow> doubled = rows;
  doubled.insert(doubled.end(), rows.begin(), rows.end());
  const LinearSvmModel a = fit_classifier(rows, 2, SvmConfig{});
  const LinearSvmModel b = fit_classifier(doubled, 2, SvmConfig{});
  for (int c = 0; c < 2; ++c) {
    CHECK(std::abs(a.biases[c] - b.biases[c]) < 1e-9);
    for (int d = 0; d < a.feature_dim; ++d) {
      CHECK(std::abs(a.weights[c][d] - b.weights[c][d]) < 1e-9);
    }
  }
}

TEST_CASE("svm objective is non-increasing over the epoch trajectory") {
  const std::vector<ShadowRow> rows = blob_rows();
  SvmConfig cfg;
  double previous = std::numeric_limits<double>::infinity();
  for (int epochs = 1; epochs <= 41; epochs += 5) {
    cfg.epochs = epochs;
    const LinearSvmModel model = fit_classifier(rows, 2, cfg);
    const double objective = svm_objective(model, rows, cfg.C);
    CHECK(objective <= previous + 1e-9);
    previous = objective;
  }
}

TEST_CASE("svm input validation") {
  std::vector<ShadowRow> one_class;
  one_class.push_back(make_row({1.0, 2.0}, 0, 0, true));
  one_class.push_back(make_row({2.0, 1.0}, 0, 1, true));
  CHECK_THROWS_AS(fit_classifier(one_class, 2, SvmConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(fit_classifier({}, 2, SvmConfig{}), std::invalid_argument);
}

TEST_CASE("degenerate feature dimensions are neutralized, not divided by zero") {
  std::vector<ShadowRow> rows;
  for (int i = 0; i < 10; ++i) {
    rows.push_back(make_row({i < 5 ? 1.0 : -1.0, 7.0}, i < 5 ? 0 : 1, i, true));
  }
  const LinearSvmModel model = fit_classifier(rows, 2, SvmConfig{});
  CHECK(model.scaler.std[1] == 1.0);
  for (const ShadowRow& row : rows) {
    CHECK(infer_candidate(model, row.features).first == row.label);
  }
}

TEST_CASE("infer_candidate scores and tie-break") {
  LinearSvmModel model;
  model.num_classes = 3;
  model.feature_dim = 2;
  model.scaler.mean = {1.0, -1.0};
  model.scaler.std = {2.0, 0.5};
  model.weights = {{0.3, -0.7}, {1.1, 0.2}, {0.0, 0.0}};
  model.biases = {0.1, -0.4, 0.0};

  FeatureVector f;
  f.values = {3.0, 0.5};
  const auto [label, scores] = infer_candidate(model, f);
  const double x0 = (3.0 - 1.0) / 2.0, x1 = (0.5 + 1.0) / 0.5;
  for (int c = 0; c < 3; ++c) {
    const double expected = model.weights[c][0] * x0 + model.weights[c][1] * x1 + model.biases[c];
    CHECK(scores[c] == doctest::Approx(expected));
  }
  CHECK(label == 1);

  LinearSvmModel zeros;
  zeros.num_classes = 4;
  zeros.feature_dim = 2;
  zeros.scaler.mean = {0.0, 0.0};
  zeros.scaler.std = {1.0, 1.0};
  zeros.weights.assign(4, {0.0, 0.0});
  zeros.biases.assign(4, 0.0);
  CHECK(infer_candidate(zeros, f).first == 0);  // all ties resolve to class 0

  FeatureVector wrong;
  wrong.values = {1.0};
  CHECK_THROWS_AS(infer_candidate(model, wrong), std::invalid_argument);
}

TEST_CASE("feature csv and svm json round-trip") {
  ShadowDataset dataset;
  dataset.num_classes = 2;
  dataset.feature_dim = 4;
  dataset.rows.push_back(make_row({1.5, 0.25, -3.125, 0.0}, 0, 0, true));
  dataset.rows.push_back(make_row({-0.5, 1.0 / 3.0, 2.75, 1e-9}, 1, 3, false));
  const std::string csv = "test_shadow_features.features.csv";
  write_features_csv(dataset, csv);
  const ShadowDataset loaded = read_features_csv(csv);
  REQUIRE(loaded.rows.size() == 2);
  CHECK(loaded.num_classes == 2);
  CHECK(loaded.feature_dim == 4);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(loaded.rows[i].label == dataset.rows[i].label);
    CHECK(loaded.rows[i].seed_index == dataset.rows[i].seed_index);
    CHECK(loaded.rows[i].is_train == dataset.rows[i].is_train);
    REQUIRE(loaded.rows[i].features.values.size() == 4);
    for (int d = 0; d < 4; ++d) {
      CHECK(loaded.rows[i].features.values[d] == dataset.rows[i].features.values[d]);
    }
  }
  std::remove(csv.c_str());

  const LinearSvmModel model = fit_classifier(blob_rows(), 2, SvmConfig{});
  const std::string path = "test_shadow_model.svm.json";
  save_svm(model, path);
  const LinearSvmModel reloaded = load_svm(path);
  CHECK(reloaded.num_classes == model.num_classes);
  CHECK(reloaded.scaler.mean == model.scaler.mean);
  CHECK(reloaded.scaler.std == model.scaler.std);
  CHECK(reloaded.weights == model.weights);
  CHECK(reloaded.biases == model.biases);
  std::remove(path.c_str());
}

TEST_CASE("shadow training produces N*m labeled policies deterministically") {
  const envs::CandidateSet set = envs::builtin_candidate_set("pointbot_extreme");
  ShadowTrainConfig cfg;
  cfg.pointbot.total_episodes = 3;
  const std::vector<ShadowPolicy> policies = train_shadow_policies(set, 2, cfg, 77, 2);
  REQUIRE(policies.size() == 12);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 2; ++j) {
      const ShadowPolicy& sp = policies[i * 2 + j];
      CHECK(sp.candidate_index == i);
      CHECK(sp.seed_index == j);
    }
  }
  const std::vector<ShadowPolicy> again = train_shadow_policies(set, 2, cfg, 77, 1);
  for (std::size_t i = 0; i < policies.size(); ++i) {
    CHECK(again[i].policy.params == policies[i].policy.params);
  }
  CHECK_THROWS_AS(train_shadow_policies(set, 0, cfg, 77), std::invalid_argument);
}

TEST_CASE("experiment split hygiene: the model sees only train-seed rows") {
  const envs::CandidateSet set = envs::builtin_candidate_set("pointbot_extreme");
  ShadowTrainConfig cfg;
  cfg.pointbot.total_episodes = 20;
  SvmConfig svm;
  const InferenceReport report = run_inference_experiment(set, 3, 1, 4, cfg, svm, 5, 2);

  REQUIRE(report.dataset.rows.size() == 18);
  std::vector<ShadowRow> train_rows;
  for (const ShadowRow& row : report.dataset.rows) {
    CHECK(row.is_train == (row.seed_index < 1));
    if (row.is_train) train_rows.push_back(row);
  }
  const LinearSvmModel refit = fit_classifier(train_rows, set.size(), svm);
  CHECK(refit.weights == report.model.weights);
  CHECK(refit.biases == report.model.biases);
  CHECK(refit.scaler.mean == report.model.scaler.mean);

  // Confusion rows sum to the per-candidate test count.
  for (int c = 0; c < set.size(); ++c) {
    int row_sum = 0;
    for (int p = 0; p < set.size(); ++p) row_sum += report.confusion[c][p];
    CHECK(row_sum == report.test_seeds);
  }
  CHECK(report.per_candidate_accuracy.size() == 6);
  CHECK(report.macro_average >= 0.0);
  CHECK(report.macro_average <= 1.0);

  CHECK_THROWS_AS(run_inference_experiment(set, 3, 3, 4, cfg, svm, 5), std::invalid_argument);
}
