#include "dynsleuth/cli_commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dynsleuth/manifest.hpp"
#include "dynsleuth/parallel.hpp"
#include "dynsleuth/version.hpp"

namespace fs = std::filesystem;

namespace dynsleuth::cli {
namespace {

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void finish_manifest(RunManifest manifest, const std::string& dir_or_file) {
  manifest.finished_at = iso8601_utc_now();
  const fs::path base(dir_or_file);
  const std::string path = fs::is_directory(base) ? (base / "manifest.json").string()
                                                  : base.string() + ".manifest.json";
  write_manifest(manifest, path);
}

envs::CandidateSet load_set(const std::string& set_name, const std::string& candidates_path) {
  if (!candidates_path.empty()) return envs::load_candidate_set(candidates_path);
  return envs::builtin_candidate_set(set_name);
}

std::string two_decimals_percent(double fraction) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f%%", fraction * 100.0);
  return buffer;
}

}  // namespace

std::pair<int, int> parse_size(const std::string& text) {
  const std::size_t x = text.find('x');
  if (x == std::string::npos) throw std::invalid_argument("expected WxH, got '" + text + "'");
  const int w = std::stoi(text.substr(0, x));
  const int h = std::stoi(text.substr(x + 1));
  if (w < 1 || h < 1) throw std::invalid_argument("size must be positive: '" + text + "'");
  return {w, h};
}

std::pair<int, int> parse_cell(const std::string& text) {
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("expected row,col, got '" + text + "'");
  return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
}

std::vector<std::string> cmd_gen_maps(const GenMapsOptions& opts) {
  if (opts.out_dir.empty()) throw std::invalid_argument("gen-maps: --out is required");
  fs::create_directories(opts.out_dir);
  RunManifest manifest;
  manifest.command = "gen-maps";
  manifest.argv = opts.argv;
  manifest.seed = opts.seed;
  manifest.started_at = iso8601_utc_now();
  manifest.config = {{"count", opts.count},   {"width", opts.width},   {"height", opts.height},
                     {"goal_row", opts.goal_row}, {"goal_col", opts.goal_col},
                     {"density", opts.density},   {"max_tries", opts.max_tries}};

  const int goal = opts.goal_row * opts.width + opts.goal_col;
  std::vector<std::string> paths;
  for (int i = 0; i < opts.count; ++i) {
    RngStream rng = RngStream(opts.seed).substream({0x6D6170, static_cast<std::uint64_t>(i)});
    const grid::GridMap map =
        grid::random_map(opts.width, opts.height, goal, opts.density, rng, opts.max_tries);
    char name[32];
    std::snprintf(name, sizeof(name), "map_%03d.map", i);
    const std::string path = join_path(opts.out_dir, name);
    grid::save_map(map, path);
    if (!(grid::load_map(path) == map)) throw std::runtime_error("gen-maps: verification failed");
    paths.push_back(path);
    manifest.artifacts.push_back(path);
  }
  finish_manifest(std::move(manifest), opts.out_dir);
  return paths;
}

TrainOutcome cmd_train(const TrainOptions& opts) {
  if (opts.out_path.empty()) throw std::invalid_argument("train: --out is required");
  const std::string log_path = opts.log_path.empty() ? opts.out_path + ".log" : opts.log_path;
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("train: cannot open log " + log_path);

  RunManifest manifest;
  manifest.command = "train";
  manifest.argv = opts.argv;
  manifest.seed = opts.seed;
  manifest.started_at = iso8601_utc_now();
  manifest.config = {{"env", opts.env}, {"algo", opts.algo}, {"map", opts.map_path},
                     {"slip_prob", opts.slip_prob}, {"move_penalty", opts.move_penalty},
                     {"target_goal_rate", opts.target_goal_rate}};

  TrainOutcome outcome;
  if (opts.env == "grid" || opts.env == "slipgrid") {
    if (opts.algo != "dqn" && opts.algo != "pg") {
      throw std::invalid_argument("train: env '" + opts.env + "' supports dqn or pg, not " +
                                  opts.algo);
    }
    envs::SlipGridParams params;
    if (!opts.candidates_path.empty()) {
      const envs::CandidateSet set = envs::load_candidate_set(opts.candidates_path);
      auto it = std::find_if(set.candidates.begin(), set.candidates.end(),
                             [&](const auto& c) { return c.label == opts.candidate_label; });
      if (it == set.candidates.end() || it->family != envs::Family::SlipGrid) {
        throw std::invalid_argument("train: no slipgrid candidate labeled '" +
                                    opts.candidate_label + "'");
      }
      params = it->slip;
    } else {
      if (opts.map_path.empty()) throw std::invalid_argument("train: --map is required");
      params.base_map = grid::load_map(opts.map_path);
      params.slip_prob = opts.env == "slipgrid" ? opts.slip_prob : 0.0;
      params.move_penalty = opts.env == "slipgrid" ? opts.move_penalty : 0.0;
    }
    if (!grid::validate_constraints(params.base_map).pass()) {
      throw std::invalid_argument("train: map violates the floor-plan constraints");
    }
    grid::MdpSpec mdp;
    envs::SlipGridEnv env(params, mdp);
    envs::SlipGridEnv eval_env(params, mdp);

    train::Checkpoint checkpoint = [&](long progress, double eps, const Policy& snapshot) {
      const double rate = train::grid_goal_rate(snapshot, eval_env, 1);
      train::RewardStats stats = train::evaluate_policy(snapshot, eval_env, 20, 2);
      outcome.goal_rate = rate;
      outcome.mean_return = stats.mean;
      log << "step=" << progress << " eps=" << eps << " eval_return=" << stats.mean
          << " goal_rate=" << rate << '\n';
      log.flush();
      return opts.target_goal_rate > 0.0 && rate >= opts.target_goal_rate;
    };

    if (opts.algo == "dqn") {
      train::DqnConfig cfg = opts.dqn;
      if (opts.steps_override > 0) cfg.total_steps = opts.steps_override;
      outcome.policy = train::train_dqn(env, cfg, opts.seed, checkpoint);
    } else {
      train::PgConfig cfg = opts.pg;
      if (opts.episodes_override > 0) cfg.total_episodes = opts.episodes_override;
      outcome.policy = train::train_pg(env, cfg, opts.seed, checkpoint);
    }
    outcome.goal_rate = train::grid_goal_rate(outcome.policy, eval_env, 1);
    outcome.mean_return = train::evaluate_policy(outcome.policy, eval_env, 20, 2).mean;
    log << "final goal_rate=" << outcome.goal_rate << " eval_return=" << outcome.mean_return
        << '\n';
  } else if (opts.env == "pointbot") {
    if (opts.algo != "gpg") {
      throw std::invalid_argument("train: env pointbot supports only the gpg algorithm");
    }
    envs::PointBotParams params{opts.mass, opts.friction, opts.power};
    if (!opts.candidates_path.empty()) {
      const envs::CandidateSet set = envs::load_candidate_set(opts.candidates_path);
      auto it = std::find_if(set.candidates.begin(), set.candidates.end(),
                             [&](const auto& c) { return c.label == opts.candidate_label; });
      if (it == set.candidates.end() || it->family != envs::Family::PointBot) {
        throw std::invalid_argument("train: no pointbot candidate labeled '" +
                                    opts.candidate_label + "'");
      }
      params = it->bot;
    }
    envs::PointBotEnv env(params);
    train::GaussianPgConfig cfg = opts.gpg;
    if (opts.episodes_override > 0) cfg.total_episodes = opts.episodes_override;
    cfg.eval_interval_episodes = cfg.eval_interval_episodes > 0 ? cfg.eval_interval_episodes : 100;
    train::Checkpoint checkpoint = [&](long progress, double, const Policy& snapshot) {
      envs::PointBotEnv eval_env(params);
      const train::RewardStats stats = train::evaluate_policy(snapshot, eval_env, 10, 2);
      outcome.mean_return = stats.mean;
      log << "episode=" << progress << " eps=0 eval_return=" << stats.mean << '\n';
      return false;
    };
    outcome.policy = train::train_gaussian_pg(env, cfg, opts.seed, checkpoint);
    envs::PointBotEnv eval_env(params);
    outcome.mean_return = train::evaluate_policy(outcome.policy, eval_env, 20, 2).mean;
    log << "final eval_return=" << outcome.mean_return << '\n';
  } else {
    throw std::invalid_argument("train: unknown env '" + opts.env + "'");
  }

  save_policy(outcome.policy, opts.out_path);
  if (!(load_policy(opts.out_path) == outcome.policy)) {
    throw std::runtime_error("train: policy verification failed");
  }
  manifest.artifacts = {opts.out_path, log_path};
  finish_manifest(std::move(manifest), opts.out_path);
  return outcome;
}

attack::AttackReport cmd_attack(const AttackOptions& opts) {
  if (opts.policy_path.empty() || opts.out_path.empty()) {
    throw std::invalid_argument("attack: --policy and --out are required");
  }
  const Policy target = load_policy(opts.policy_path);

  RunManifest manifest;
  manifest.command = "attack";
  manifest.argv = opts.argv;
  manifest.seed = opts.seed;
  manifest.started_at = iso8601_utc_now();

  attack::AttackConfig cfg;
  cfg.method = attack::method_from_name(opts.method);
  cfg.agent_kind = opts.agent_kind;
  cfg.seeds = opts.seeds;
  cfg.base_seed = opts.seed;
  cfg.jobs = opts.jobs;
  cfg.ga = opts.ga;
  cfg.rl = opts.rl;
  cfg.fitness = attack::default_fitness_for(opts.agent_kind);
  cfg.fitness.epsilon = opts.epsilon;
  cfg.fitness.temperature = opts.temperature;
  cfg.fitness.normalize = opts.normalize;

  std::optional<grid::GridMap> truth;
  if (!opts.truth_path.empty()) {
    truth = grid::load_map(opts.truth_path);
    cfg.ga.space = ga::GenomeSpace{truth->width, truth->height, truth->goal};
  } else {
    cfg.ga.space =
        ga::GenomeSpace{opts.width, opts.height, opts.goal_row * opts.width + opts.goal_col};
  }
  cfg.random_budget.max_evaluations =
      opts.random_budget > 0 ? opts.random_budget
                             : static_cast<long>(ga::ga_eval_budget(cfg.ga)) * cfg.seeds;

  attack::AttackReport report = run_attack(target, cfg, truth ? &*truth : nullptr);
  report.target_policy_path = opts.policy_path;
  report.config_echo = {{"method", opts.method},
                        {"agent_kind", opts.agent_kind},
                        {"seeds", opts.seeds},
                        {"base_seed", opts.seed},
                        {"population_size", cfg.ga.population_size},
                        {"elite_size", cfg.ga.elite_size},
                        {"generations", cfg.ga.generations},
                        {"mutation_rate", cfg.ga.mutation_rate},
                        {"epsilon", opts.epsilon},
                        {"temperature", opts.temperature},
                        {"normalize", opts.normalize},
                        {"random_budget", cfg.random_budget.max_evaluations},
                        {"rl_total_steps", cfg.rl.total_steps}};
  attack::save_attack_report(report, opts.out_path);
  attack::load_report_json(opts.out_path);  // verification
  manifest.artifacts = {opts.out_path};
  finish_manifest(std::move(manifest), opts.out_path);
  return report;
}

nlohmann::json inference_report_to_json(const shadow::InferenceReport& report,
                                        const envs::CandidateSet& set, double seconds) {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "inference";
  doc["environment"] = set.family == envs::Family::PointBot ? "PointBot" : "SlipGrid";
  doc["agent"] = set.family == envs::Family::PointBot ? "GPG" : "PG";
  doc["task"] = "Candidate Inference";
  doc["method"] = "SVM";
  doc["labels"] = report.labels;
  doc["per_candidate_accuracy"] = report.per_candidate_accuracy;
  doc["macro_average"] = report.macro_average;
  doc["macro_average_raw_features"] = report.macro_average_raw;
  doc["confusion"] = report.confusion;
  doc["train_seeds"] = report.train_seeds;
  doc["test_seeds"] = report.test_seeds;
  doc["trials_per_candidate"] = report.trials_per_candidate;
  doc["wall_clock_seconds"] = seconds;
  return doc;
}

shadow::InferenceReport cmd_shadow_experiment(const ShadowExperimentOptions& opts) {
  if (opts.out_path.empty()) throw std::invalid_argument("shadow experiment: --out is required");
  const envs::CandidateSet set = load_set(opts.set_name, opts.candidates_path);

  RunManifest manifest;
  manifest.command = "shadow experiment";
  manifest.argv = opts.argv;
  manifest.seed = opts.seed;
  manifest.started_at = iso8601_utc_now();
  manifest.config = {{"set", opts.set_name.empty() ? opts.candidates_path : opts.set_name},
                     {"m", opts.m},
                     {"train_seeds", opts.train_seeds},
                     {"k", opts.k}};

  const auto started = std::chrono::steady_clock::now();
  shadow::InferenceReport report = shadow::run_inference_experiment(
      set, opts.m, opts.train_seeds, opts.k, opts.train_cfg, opts.svm_cfg, opts.seed, opts.jobs);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  write_file_atomic(opts.out_path, inference_report_to_json(report, set, seconds).dump(2) + "\n");
  manifest.artifacts.push_back(opts.out_path);
  if (!opts.features_out.empty()) {
    shadow::write_features_csv(report.dataset, opts.features_out);
    manifest.artifacts.push_back(opts.features_out);
  }
  if (!opts.svm_out.empty()) {
    shadow::save_svm(report.model, opts.svm_out);
    manifest.artifacts.push_back(opts.svm_out);
  }
  finish_manifest(std::move(manifest), opts.out_path);
  return report;
}

std::string cmd_shadow_train(const ShadowTrainOptions& opts) {
  if (opts.out_dir.empty()) throw std::invalid_argument("shadow train: --out-dir is required");
  const envs::CandidateSet set = load_set(opts.set_name, opts.candidates_path);
  fs::create_directories(opts.out_dir);

  RunManifest manifest;
  manifest.command = "shadow train";
  manifest.argv = opts.argv;
  manifest.seed = opts.seed;
  manifest.started_at = iso8601_utc_now();
  manifest.config = {{"m", opts.m}};

  const std::vector<shadow::ShadowPolicy> policies =
      shadow::train_shadow_policies(set, opts.m, opts.train_cfg, opts.seed, opts.jobs);
  nlohmann::json index;
  index["schema_version"] = kSchemaVersion;
  index["family"] = envs::family_name(set.family);
  index["m"] = opts.m;
  nlohmann::json items = nlohmann::json::array();
  for (const shadow::ShadowPolicy& sp : policies) {
    char name[64];
    std::snprintf(name, sizeof(name), "shadow_c%02d_s%03d.policy", sp.candidate_index,
                  sp.seed_index);
    const std::string path = join_path(opts.out_dir, name);
    save_policy(sp.policy, path);
    items.push_back({{"path", name},
                     {"candidate_index", sp.candidate_index},
                     {"label", set.candidates[sp.candidate_index].label},
                     {"seed_index", sp.seed_index}});
    manifest.artifacts.push_back(path);
  }
  index["policies"] = std::move(items);
  const std::string index_path = join_path(opts.out_dir, "index.json");
  write_file_atomic(index_path, index.dump(2) + "\n");
  manifest.artifacts.push_back(index_path);
  finish_manifest(std::move(manifest), opts.out_dir);
  return index_path;
}

shadow::ShadowDataset cmd_shadow_features(const ShadowFeaturesOptions& opts) {
  if (opts.index_path.empty() || opts.out_path.empty()) {
    throw std::invalid_argument("shadow features: --index and --out are required");
  }
  const envs::CandidateSet set = load_set(opts.set_name, opts.candidates_path);
  std::ifstream in(opts.index_path);
  if (!in) throw std::runtime_error("shadow features: missing index " + opts.index_path);
  nlohmann::json index;
  in >> index;

  RunManifest manifest;
  manifest.command = "shadow features";
  manifest.argv = opts.argv;
  manifest.seed = opts.seed;
  manifest.started_at = iso8601_utc_now();
  manifest.config = {{"k", opts.k}, {"train_seeds", opts.train_seeds}};

  const fs::path base = fs::path(opts.index_path).parent_path();
  shadow::ShadowDataset dataset;
  dataset.num_classes = set.size();
  dataset.feature_dim = 2 * set.size();
  const auto& entries = index.at("policies");
  dataset.rows.resize(entries.size());
  parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
    const nlohmann::json& entry = entries[i];
    const Policy policy = load_policy((base / entry.at("path").get<std::string>()).string());
    shadow::ShadowRow row;
    row.label = entry.at("candidate_index").get<int>();
    row.seed_index = entry.at("seed_index").get<int>();
    row.is_train = row.seed_index < opts.train_seeds;
    row.features = shadow::extract_features(
        policy, set, opts.k,
        derive_seed(opts.seed, {0x66656174, static_cast<std::uint64_t>(row.label),
                                static_cast<std::uint64_t>(row.seed_index)}),
        opts.train_cfg);
    dataset.rows[i] = std::move(row);
  });
  shadow::write_features_csv(dataset, opts.out_path);
  manifest.artifacts = {opts.out_path};
  finish_manifest(std::move(manifest), opts.out_path);
  return dataset;
}

shadow::LinearSvmModel cmd_shadow_fit(const ShadowFitOptions& opts) {
  if (opts.features_path.empty() || opts.out_path.empty()) {
    throw std::invalid_argument("shadow fit: --features and --out are required");
  }
  const shadow::ShadowDataset dataset = shadow::read_features_csv(opts.features_path);
  std::vector<shadow::ShadowRow> train_rows;
  for (const shadow::ShadowRow& row : dataset.rows) {
    if (row.is_train) train_rows.push_back(row);
  }
  const shadow::LinearSvmModel model =
      shadow::fit_classifier(train_rows, dataset.num_classes, opts.svm_cfg, !opts.raw);
  shadow::save_svm(model, opts.out_path);

  RunManifest manifest;
  manifest.command = "shadow fit";
  manifest.argv = opts.argv;
  manifest.started_at = iso8601_utc_now();
  manifest.config = {{"features", opts.features_path}, {"raw", opts.raw}};
  manifest.artifacts = {opts.out_path};
  finish_manifest(std::move(manifest), opts.out_path);
  return model;
}

std::pair<int, std::string> cmd_shadow_infer(const ShadowInferOptions& opts) {
  if (opts.model_path.empty() || opts.policy_path.empty()) {
    throw std::invalid_argument("shadow infer: --model and --policy are required");
  }
  const envs::CandidateSet set = load_set(opts.set_name, opts.candidates_path);
  const shadow::LinearSvmModel model = shadow::load_svm(opts.model_path);
  const Policy policy = load_policy(opts.policy_path);
  const shadow::FeatureVector features =
      shadow::extract_features(policy, set, opts.k, opts.seed, opts.train_cfg);
  const auto [label, scores] = shadow::infer_candidate(model, features);

  if (!opts.out_path.empty()) {
    nlohmann::json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["kind"] = "inference_single";
    doc["policy"] = opts.policy_path;
    doc["label_index"] = label;
    doc["label"] = set.candidates[label].label;
    doc["scores"] = scores;
    doc["features"] = features.values;
    write_file_atomic(opts.out_path, doc.dump(2) + "\n");
  }
  return {label, set.candidates[label].label};
}

std::string cmd_report(const ReportOptions& opts) {
  if (opts.inputs.empty()) throw std::invalid_argument("report: no input reports given");
  if (opts.out_path.empty()) throw std::invalid_argument("report: --out is required");

  struct Key {
    std::string environment, agent, task, method;
    bool operator<(const Key& other) const {
      return std::tie(environment, agent, task, method) <
             std::tie(other.environment, other.agent, other.task, other.method);
    }
  };
  struct Cell {
    double rate_sum = 0.0;
    double seconds_sum = 0.0;
    int count = 0;
  };
  std::map<Key, Cell> groups;

  auto method_display = [](const std::string& m) -> std::string {
    if (m == "random") return "Random Search";
    if (m == "rl") return "RL-based Search";
    if (m == "ga") return "Genetic Algorithm";
    return m;
  };

  for (const std::string& input : opts.inputs) {
    const nlohmann::json doc = attack::load_report_json(input);
    if (doc.value("schema_version", -1) != kSchemaVersion) {
      throw std::runtime_error("report: schema version mismatch in " + input);
    }
    const std::string kind = doc.value("kind", "attack");
    Key key;
    key.environment = doc.at("environment").get<std::string>();
    key.task = doc.at("task").get<std::string>();
    Cell& cell = [&]() -> Cell& {
      if (kind == "inference") {
        key.agent = doc.at("agent").get<std::string>();
        key.method = doc.at("method").get<std::string>();
        return groups[key];
      }
      std::string agent = doc.at("agent_kind").get<std::string>();
      std::transform(agent.begin(), agent.end(), agent.begin(), ::toupper);
      key.agent = agent;
      key.method = method_display(doc.at("method").get<std::string>());
      return groups[key];
    }();
    if (kind == "inference") {
      cell.rate_sum += doc.at("macro_average").get<double>();
    } else {
      if (!doc.contains("best_recovery_rate")) {
        throw std::runtime_error("report: " + input + " has no recovery rate (no --truth?)");
      }
      cell.rate_sum += doc.at("best_recovery_rate").get<double>();
    }
    cell.seconds_sum += doc.value("wall_clock_seconds", 0.0);
    cell.count += 1;
  }

  const std::vector<std::string> method_order = {"Random Search", "RL-based Search",
                                                 "Genetic Algorithm", "SVM"};
  std::vector<std::pair<Key, Cell>> rows(groups.begin(), groups.end());
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    if (a.first.environment != b.first.environment)
      return a.first.environment < b.first.environment;
    if (a.first.agent != b.first.agent) return a.first.agent < b.first.agent;
    const auto rank = [&](const std::string& m) {
      return std::find(method_order.begin(), method_order.end(), m) - method_order.begin();
    };
    return rank(a.first.method) < rank(b.first.method);
  });

  std::ostringstream out;
  out << "| Environment | Agent | Task | Method | Recovery Rate | Run Time (s) |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& [key, cell] : rows) {
    out << "| " << key.environment << " | " << key.agent << " | " << key.task << " | "
        << key.method << " | " << two_decimals_percent(cell.rate_sum / cell.count) << " | "
        << std::lround(cell.seconds_sum / cell.count) << " |\n";
  }
  const std::string table = out.str();
  write_file_atomic(opts.out_path, table);

  RunManifest manifest;
  manifest.command = "report";
  manifest.argv = opts.argv;
  manifest.started_at = iso8601_utc_now();
  manifest.config = {{"inputs", opts.inputs}};
  manifest.artifacts = {opts.out_path};
  finish_manifest(std::move(manifest), opts.out_path);
  return table;
}

}  // namespace dynsleuth::cli
