#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynsleuth/attack_runner.hpp"
#include "dynsleuth/shadow_inference.hpp"

namespace dynsleuth::cli {

struct GenMapsOptions {
  int count = 20;
  int width = 7;
  int height = 7;
  int goal_row = 3;
  int goal_col = 3;
  double density = 0.3;
  int max_tries = 1000;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<std::string> argv;
};

/// Writes count constraint-valid ".map" files plus a manifest; returns the
/// map file paths.
std::vector<std::string> cmd_gen_maps(const GenMapsOptions& opts);

struct TrainOptions {
  std::string env = "grid";   // grid | slipgrid | pointbot
  std::string algo = "dqn";   // dqn | pg | gpg
  std::string map_path;       // grid / slipgrid
  double slip_prob = 0.0;     // slipgrid
  double move_penalty = 0.0;  // slipgrid
  std::string candidates_path;  // alternative env source
  std::string candidate_label;
  double mass = 1.0, friction = 0.5, power = 1.0;  // pointbot (when no candidate file)
  std::uint64_t seed = 0;
  std::string out_path;
  std::string log_path;  // defaults to out_path + ".log"
  double target_goal_rate = 0.95;  // 0 disables early stopping
  long steps_override = 0;         // 0 keeps the algorithm default
  long episodes_override = 0;
  train::DqnConfig dqn;
  train::PgConfig pg;
  train::GaussianPgConfig gpg;
  std::vector<std::string> argv;
};

struct TrainOutcome {
  Policy policy;
  double goal_rate = -1.0;  // grid family only
  double mean_return = 0.0;
};

TrainOutcome cmd_train(const TrainOptions& opts);

struct AttackOptions {
  std::string method = "ga";
  std::string policy_path;
  std::string agent_kind = "dqn";
  int seeds = 8;
  std::uint64_t seed = 0;
  std::string truth_path;  // optional; also fixes the genome space
  int width = 7, height = 7, goal_row = 3, goal_col = 3;  // used when no truth
  std::string out_path;
  ga::GaConfig ga;
  double epsilon = 0.02;
  double temperature = 0.01;
  bool normalize = false;
  long random_budget = 0;  // 0 -> match the GA budget
  baseline::RlSearchConfig rl;
  int jobs = 1;
  std::vector<std::string> argv;
};

attack::AttackReport cmd_attack(const AttackOptions& opts);

struct ShadowExperimentOptions {
  std::string set_name = "pointbot6";  // builtin name, or empty when candidates_path set
  std::string candidates_path;
  int m = 32;
  int train_seeds = 8;
  int k = 20;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string features_out;  // optional csv
  std::string svm_out;       // optional model file
  int jobs = 1;
  shadow::ShadowTrainConfig train_cfg;
  shadow::SvmConfig svm_cfg;
  std::vector<std::string> argv;
};

shadow::InferenceReport cmd_shadow_experiment(const ShadowExperimentOptions& opts);

struct ShadowTrainOptions {
  std::string set_name = "pointbot6";
  std::string candidates_path;
  int m = 8;
  std::uint64_t seed = 0;
  std::string out_dir;
  int jobs = 1;
  shadow::ShadowTrainConfig train_cfg;
  std::vector<std::string> argv;
};

/// Writes one ".policy" per (candidate, seed) plus an index.json with
/// provenance; returns the index path.
std::string cmd_shadow_train(const ShadowTrainOptions& opts);

struct ShadowFeaturesOptions {
  std::string index_path;  // from cmd_shadow_train
  std::string set_name = "pointbot6";
  std::string candidates_path;
  int k = 20;
  int train_seeds = 8;
  std::uint64_t seed = 0;
  std::string out_path;
  int jobs = 1;
  shadow::ShadowTrainConfig train_cfg;
  std::vector<std::string> argv;
};

shadow::ShadowDataset cmd_shadow_features(const ShadowFeaturesOptions& opts);

struct ShadowFitOptions {
  std::string features_path;
  std::string out_path;
  bool raw = false;  // skip standardization
  shadow::SvmConfig svm_cfg;
  std::vector<std::string> argv;
};

shadow::LinearSvmModel cmd_shadow_fit(const ShadowFitOptions& opts);

struct ShadowInferOptions {
  std::string model_path;
  std::string policy_path;
  std::string set_name = "pointbot6";
  std::string candidates_path;
  int k = 20;
  std::uint64_t seed = 0;
  std::string out_path;  // optional json
  shadow::ShadowTrainConfig train_cfg;
  std::vector<std::string> argv;
};

/// Returns (label index, label string).
std::pair<int, std::string> cmd_shadow_infer(const ShadowInferOptions& opts);

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string out_path;
  std::vector<std::string> argv;
};

/// Aggregates attack and inference reports into a markdown table with the
/// columns Environment | Agent | Task | Method | Recovery Rate | Run Time (s).
std::string cmd_report(const ReportOptions& opts);

/// "7x7" -> (7, 7); "3,4" -> (3, 4). Throw on malformed input.
std::pair<int, int> parse_size(const std::string& text);
std::pair<int, int> parse_cell(const std::string& text);

nlohmann::json inference_report_to_json(const shadow::InferenceReport& report,
                                        const envs::CandidateSet& set, double seconds);

}  // namespace dynsleuth::cli
