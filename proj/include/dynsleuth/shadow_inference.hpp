#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dynsleuth/env_families.hpp"
#include "dynsleuth/policy.hpp"
#include "dynsleuth/trainers.hpp"

namespace dynsleuth::shadow {

/// Per-candidate (mean, variance) of episodic reward, laid out
/// [mean_1, var_1, ..., mean_N, var_N] in candidate-set order.
struct FeatureVector {
  std::vector<double> values;

  bool operator==(const FeatureVector&) const = default;
};

struct ShadowRow {
  FeatureVector features;
  int label = 0;       // candidate index
  int seed_index = 0;  // shadow-training seed within the candidate
  bool is_train = false;
};

struct ShadowDataset {
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<ShadowRow> rows;
};

/// Trainer settings used for shadow policies, dispatched by family.
struct ShadowTrainConfig {
  train::PgConfig slipgrid_pg = [] {
    train::PgConfig cfg;
    // Fixed budget, no early stop: how far training gets on each candidate is
    // part of the behavioral signature the classifier reads.
    cfg.total_episodes = 1500;
    cfg.eval_interval_episodes = 0;
    return cfg;
  }();
  train::GaussianPgConfig pointbot;
  grid::MdpSpec mdp;
};

struct ShadowPolicy {
  Policy policy;
  int candidate_index = 0;
  int seed_index = 0;
};

/// Trains one policy per (candidate, seed) pair; N*m in total. Throws with
/// the failing (candidate, seed) identified if any run fails.
std::vector<ShadowPolicy> train_shadow_policies(const envs::CandidateSet& candidates, int m,
                                                const ShadowTrainConfig& cfg, std::uint64_t seed,
                                                int jobs = 1);

/// Evaluates the policy for k trials on every candidate environment in order
/// and concatenates (mean, population variance) pairs.
FeatureVector extract_features(const Policy& policy, const envs::CandidateSet& candidates, int k,
                               std::uint64_t seed, const ShadowTrainConfig& cfg);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;  // degenerate dims get std = 1

  std::vector<double> apply(const std::vector<double>& x) const;
};

struct LinearSvmModel {
  Standardizer scaler;
  std::vector<std::vector<double>> weights;  // per class
  std::vector<double> biases;
  int num_classes = 0;
  int feature_dim = 0;
  bool standardized = true;
};

struct SvmConfig {
  double C = 1.0;
  int epochs = 400;
  double lr = 0.1;
  double lr_decay = 0.02;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM fit by deterministic subgradient descent on the
/// L2-regularized mean hinge loss of the train rows.
LinearSvmModel fit_classifier(const std::vector<ShadowRow>& train_rows, int num_classes,
                              const SvmConfig& cfg, bool standardize = true);

/// Objective value (regularizer + mean hinge over all classes) of a model on
/// rows; exposed for convergence diagnostics.
double svm_objective(const LinearSvmModel& model, const std::vector<ShadowRow>& rows,
                     double C);

/// Returns (label, per-class decision values); ties go to the lowest index.
std::pair<int, std::vector<double>> infer_candidate(const LinearSvmModel& model,
                                                    const FeatureVector& features);

struct InferenceReport {
  std::vector<std::string> labels;
  std::vector<double> per_candidate_accuracy;
  double macro_average = 0.0;
  double macro_average_raw = 0.0;  // classifier on unstandardized features
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  int train_seeds = 0;
  int test_seeds = 0;
  int trials_per_candidate = 0;
  ShadowDataset dataset;
  LinearSvmModel model;
};

/// End-to-end candidate inference: shadow training, feature extraction,
/// fitting on the first train_seed_count seeds per candidate, evaluating on
/// the rest. Reports per-candidate accuracy, the macro average, and the
/// confusion matrix (plus the raw-feature variant for comparison).
InferenceReport run_inference_experiment(const envs::CandidateSet& candidates, int m,
                                         int train_seed_count, int k,
                                         const ShadowTrainConfig& train_cfg,
                                         const SvmConfig& svm_cfg, std::uint64_t seed,
                                         int jobs = 1);

/// ".features.csv": header "label,seed,split,m1,v1,...,mN,vN".
void write_features_csv(const ShadowDataset& dataset, const std::string& path);
ShadowDataset read_features_csv(const std::string& path);

/// ".svm.json": standardization stats plus per-class weights and biases.
void save_svm(const LinearSvmModel& model, const std::string& path);
LinearSvmModel load_svm(const std::string& path);

}  // namespace dynsleuth::shadow
