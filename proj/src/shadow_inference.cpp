#include "dynsleuth/shadow_inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dynsleuth/parallel.hpp"
#include "json.hpp"

namespace dynsleuth::shadow {
namespace {

constexpr std::uint64_t kShadowLabel = 0x736861646F77;  // shadow
constexpr std::uint64_t kFeatureLabel = 0x66656174;     // feat

Policy train_one(const envs::DynamicsCandidate& candidate, const ShadowTrainConfig& cfg,
                 std::uint64_t seed) {
  std::unique_ptr<Env> env = envs::make_env(candidate, cfg.mdp);
  if (candidate.family == envs::Family::SlipGrid) {
    return train::train_pg(*env, cfg.slipgrid_pg, seed);
  }
  return train::train_gaussian_pg(*env, cfg.pointbot, seed);
}

}  // namespace

std::vector<ShadowPolicy> train_shadow_policies(const envs::CandidateSet& candidates, int m,
                                                const ShadowTrainConfig& cfg, std::uint64_t seed,
                                                int jobs) {
  if (m < 1) throw std::invalid_argument("train_shadow_policies: m must be >= 1");
  const int n = candidates.size();
  std::vector<ShadowPolicy> out(static_cast<std::size_t>(n) * m);
  std::string failure;
  std::mutex failure_mutex;
  parallel_for(out.size(), jobs, [&](std::size_t idx) {
    const int i = static_cast<int>(idx) / m;
    const int j = static_cast<int>(idx) % m;
    try {
      ShadowPolicy sp;
      sp.candidate_index = i;
      sp.seed_index = j;
      sp.policy = train_one(candidates.candidates[i], cfg,
                            derive_seed(seed, {kShadowLabel, static_cast<std::uint64_t>(i),
                                               static_cast<std::uint64_t>(j)}));
      out[idx] = std::move(sp);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (failure.empty()) {
        failure = "shadow training failed for candidate " +
                  candidates.candidates[i].label + " seed " + std::to_string(j) + ": " + e.what();
      }
    }
  });
  if (!failure.empty()) throw std::runtime_error(failure);
  return out;
}

FeatureVector extract_features(const Policy& policy, const envs::CandidateSet& candidates, int k,
                               std::uint64_t seed, const ShadowTrainConfig& cfg) {
  if (k < 1) throw std::invalid_argument("extract_features: k must be >= 1");
  FeatureVector features;
  features.values.reserve(2 * candidates.size());
  for (int i = 0; i < candidates.size(); ++i) {
    std::unique_ptr<Env> env = envs::make_env(candidates.candidates[i], cfg.mdp);
    const train::RewardStats stats = train::evaluate_policy(
        policy, *env, k, derive_seed(seed, {kFeatureLabel, static_cast<std::uint64_t>(i)}));
    features.values.push_back(stats.mean);
    features.values.push_back(stats.variance);
  }
  return features;
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
  return out;
}

LinearSvmModel fit_classifier(const std::vector<ShadowRow>& train_rows, int num_classes,
                              const SvmConfig& cfg, bool standardize) {
  if (train_rows.empty()) throw std::invalid_argument("fit_classifier: empty training set");
  std::vector<int> counts(num_classes, 0);
  for (const ShadowRow& row : train_rows) {
    if (row.label < 0 || row.label >= num_classes) {
      throw std::invalid_argument("fit_classifier: label out of range");
    }
    ++counts[row.label];
  }
  if (std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) < 2) {
    throw std::invalid_argument("fit_classifier: need at least 2 classes present");
  }

  const int dim = static_cast<int>(train_rows.front().features.values.size());
  LinearSvmModel model;
  model.num_classes = num_classes;
  model.feature_dim = dim;
  model.standardized = standardize;
  model.scaler.mean.assign(dim, 0.0);
  model.scaler.std.assign(dim, 1.0);
  const double n = static_cast<double>(train_rows.size());
  if (standardize) {
    for (const ShadowRow& row : train_rows)
      for (int d = 0; d < dim; ++d) model.scaler.mean[d] += row.features.values[d];
    for (int d = 0; d < dim; ++d) model.scaler.mean[d] /= n;
    std::vector<double> var(dim, 0.0);
    for (const ShadowRow& row : train_rows)
      for (int d = 0; d < dim; ++d) {
        const double c = row.features.values[d] - model.scaler.mean[d];
        var[d] += c * c;
      }
    for (int d = 0; d < dim; ++d) {
      const double s = std::sqrt(var[d] / n);
      model.scaler.std[d] = s > 0.0 ? s : 1.0;  // constant dims contribute 0 after centering
    }
  }

  std::vector<std::vector<double>> x;
  x.reserve(train_rows.size());
  for (const ShadowRow& row : train_rows) x.push_back(model.scaler.apply(row.features.values));

  model.weights.assign(num_classes, std::vector<double>(dim, 0.0));
  model.biases.assign(num_classes, 0.0);
  // Deterministic full-batch subgradient descent on
  //   ||w||^2 / (2C) + mean_i hinge(y_i (w.x_i + b)),
  // normalized by the row count so duplicated datasets trace the same path.
  for (int c = 0; c < num_classes; ++c) {
    std::vector<double>& w = model.weights[c];
    double& b = model.biases[c];
    std::vector<double> grad(dim);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (int d = 0; d < dim; ++d) grad[d] = w[d] / cfg.C;
      double grad_b = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double y = train_rows[i].label == c ? 1.0 : -1.0;
        double margin = b;
        for (int d = 0; d < dim; ++d) margin += w[d] * x[i][d];
        if (y * margin < 1.0) {
          for (int d = 0; d < dim; ++d) grad[d] -= y * x[i][d] / n;
          grad_b -= y / n;
        }
      }
      const double lr = cfg.lr / (1.0 + cfg.lr_decay * epoch);
      for (int d = 0; d < dim; ++d) w[d] -= lr * grad[d];
      b -= lr * grad_b;
    }
  }
  return model;
}

double svm_objective(const LinearSvmModel& model, const std::vector<ShadowRow>& rows, double C) {
  double objective = 0.0;
  for (int c = 0; c < model.num_classes; ++c) {
    double norm = 0.0;
    for (double w : model.weights[c]) norm += w * w;
    objective += norm / (2.0 * C);
    double hinge = 0.0;
    for (const ShadowRow& row : rows) {
      const std::vector<double> x = model.scaler.apply(row.features.values);
      const double y = row.label == c ? 1.0 : -1.0;
      double margin = model.biases[c];
      for (int d = 0; d < model.feature_dim; ++d) margin += model.weights[c][d] * x[d];
      hinge += std::max(0.0, 1.0 - y * margin);
    }
    objective += hinge / static_cast<double>(rows.size());
  }
  return objective;
}

std::pair<int, std::vector<double>> infer_candidate(const LinearSvmModel& model,
                                                    const FeatureVector& features) {
  if (static_cast<int>(features.values.size()) != model.feature_dim) {
    throw std::invalid_argument("infer_candidate: feature length mismatch");
  }
  const std::vector<double> x = model.scaler.apply(features.values);
  std::vector<double> scores(model.num_classes, 0.0);
  for (int c = 0; c < model.num_classes; ++c) {
    double s = model.biases[c];
    for (int d = 0; d < model.feature_dim; ++d) s += model.weights[c][d] * x[d];
    scores[c] = s;
  }
  int best = 0;
  for (int c = 1; c < model.num_classes; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return {best, std::move(scores)};
}

InferenceReport run_inference_experiment(const envs::CandidateSet& candidates, int m,
                                         int train_seed_count, int k,
                                         const ShadowTrainConfig& train_cfg,
                                         const SvmConfig& svm_cfg, std::uint64_t seed, int jobs) {
  if (train_seed_count < 1 || train_seed_count >= m) {
    throw std::invalid_argument("run_inference_experiment: need 1 <= train_seed_count < m");
  }
  const int n = candidates.size();

  const std::vector<ShadowPolicy> policies =
      train_shadow_policies(candidates, m, train_cfg, seed, jobs);

  ShadowDataset dataset;
  dataset.num_classes = n;
  dataset.feature_dim = 2 * n;
  dataset.rows.resize(policies.size());
  parallel_for(policies.size(), jobs, [&](std::size_t idx) {
    const ShadowPolicy& sp = policies[idx];
    ShadowRow row;
    row.label = sp.candidate_index;
    row.seed_index = sp.seed_index;
    row.is_train = sp.seed_index < train_seed_count;
    row.features = extract_features(
        sp.policy, candidates, k,
        derive_seed(seed, {kFeatureLabel, static_cast<std::uint64_t>(sp.candidate_index),
                           static_cast<std::uint64_t>(sp.seed_index)}),
        train_cfg);
    dataset.rows[idx] = std::move(row);
  });

  std::vector<ShadowRow> train_rows;
  for (const ShadowRow& row : dataset.rows) {
    if (row.is_train) train_rows.push_back(row);
  }

  InferenceReport report;
  report.dataset = dataset;
  report.train_seeds = train_seed_count;
  report.test_seeds = m - train_seed_count;
  report.trials_per_candidate = k;
  for (const envs::DynamicsCandidate& c : candidates.candidates) report.labels.push_back(c.label);

  report.model = fit_classifier(train_rows, n, svm_cfg, /*standardize=*/true);
  const LinearSvmModel raw_model = fit_classifier(train_rows, n, svm_cfg, /*standardize=*/false);

  report.confusion.assign(n, std::vector<int>(n, 0));
  std::vector<int> correct(n, 0), total(n, 0), raw_correct(n, 0);
  for (const ShadowRow& row : dataset.rows) {
    if (row.is_train) continue;
    const int predicted = infer_candidate(report.model, row.features).first;
    report.confusion[row.label][predicted] += 1;
    total[row.label] += 1;
    if (predicted == row.label) correct[row.label] += 1;
    if (infer_candidate(raw_model, row.features).first == row.label) raw_correct[row.label] += 1;
  }
  report.per_candidate_accuracy.resize(n);
  for (int c = 0; c < n; ++c) {
    report.per_candidate_accuracy[c] =
        total[c] > 0 ? static_cast<double>(correct[c]) / total[c] : 0.0;
    report.macro_average += report.per_candidate_accuracy[c];
    report.macro_average_raw += total[c] > 0 ? static_cast<double>(raw_correct[c]) / total[c] : 0.0;
  }
  report.macro_average /= n;
  report.macro_average_raw /= n;
  return report;
}

void write_features_csv(const ShadowDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_features_csv: cannot open " + path);
  out << "label,seed,split";
  const int n = dataset.feature_dim / 2;
  for (int i = 1; i <= n; ++i) out << ",m" << i << ",v" << i;
  out << '\n';
  out.precision(17);
  for (const ShadowRow& row : dataset.rows) {
    out << row.label << ',' << row.seed_index << ',' << (row.is_train ? "train" : "test");
    for (double v : row.features.values) out << ',' << v;
    out << '\n';
  }
}

ShadowDataset read_features_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_features_csv: cannot open " + path);
  ShadowDataset dataset;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_features_csv: empty file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row_in(line);
    std::string field;
    ShadowRow row;
    std::getline(row_in, field, ',');
    row.label = std::stoi(field);
    std::getline(row_in, field, ',');
    row.seed_index = std::stoi(field);
    std::getline(row_in, field, ',');
    row.is_train = field == "train";
    while (std::getline(row_in, field, ',')) row.features.values.push_back(std::stod(field));
    dataset.num_classes = std::max(dataset.num_classes, row.label + 1);
    dataset.feature_dim = static_cast<int>(row.features.values.size());
    dataset.rows.push_back(std::move(row));
  }
  return dataset;
}

void save_svm(const LinearSvmModel& model, const std::string& path) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["num_classes"] = model.num_classes;
  doc["feature_dim"] = model.feature_dim;
  doc["standardized"] = model.standardized;
  doc["mean"] = model.scaler.mean;
  doc["std"] = model.scaler.std;
  doc["weights"] = model.weights;
  doc["biases"] = model.biases;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_svm: cannot open " + path);
  out << doc.dump(2) << '\n';
}

LinearSvmModel load_svm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_svm: cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  LinearSvmModel model;
  model.num_classes = doc.at("num_classes").get<int>();
  model.feature_dim = doc.at("feature_dim").get<int>();
  model.standardized = doc.at("standardized").get<bool>();
  model.scaler.mean = doc.at("mean").get<std::vector<double>>();
  model.scaler.std = doc.at("std").get<std::vector<double>>();
  model.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
  model.biases = doc.at("biases").get<std::vector<double>>();
  return model;
}

}  // namespace dynsleuth::shadow
