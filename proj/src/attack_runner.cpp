#include "dynsleuth/attack_runner.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include "dynsleuth/version.hpp"

namespace dynsleuth::attack {
namespace {

constexpr std::uint64_t kSeedLabel = 0x61746B2D736565;  // atk-see

std::vector<std::string> map_rows(const grid::GridMap& map) {
  std::vector<std::string> rows;
  std::string text = grid::render_map(map);
  std::string line;
  for (char ch : text) {
    if (ch == '\n') {
      rows.push_back(line);
      line.clear();
    } else {
      line.push_back(ch);
    }
  }
  rows.push_back(line);
  return rows;
}

}  // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::Ga: return "ga";
    case Method::Random: return "random";
    case Method::Rl: return "rl";
  }
  throw std::logic_error("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "ga") return Method::Ga;
  if (name == "random") return Method::Random;
  if (name == "rl") return Method::Rl;
  throw std::invalid_argument("unknown attack method '" + name + "'");
}

ga::FitnessConfig default_fitness_for(const std::string& agent_kind) {
  ga::FitnessConfig cfg;
  if (agent_kind == "dqn") {
    cfg.delta_kind = ga::DeltaKind::ExactAction;
  } else if (agent_kind == "pg") {
    cfg.delta_kind = ga::DeltaKind::L2Threshold;
  } else {
    throw std::invalid_argument("unknown agent kind '" + agent_kind + "'");
  }
  return cfg;
}

AttackReport run_attack(const Policy& target, const AttackConfig& cfg,
                        const grid::GridMap* truth) {
  if (cfg.seeds < 1) throw std::invalid_argument("run_attack: need at least one seed");
  if (cfg.agent_kind == "dqn" && target.head != PolicyHead::QValues) {
    throw std::invalid_argument("run_attack: agent kind dqn requires a qvalues policy head");
  }
  if (cfg.agent_kind == "pg" && target.head != PolicyHead::Logits) {
    throw std::invalid_argument("run_attack: agent kind pg requires a logits policy head");
  }
  const auto started = std::chrono::steady_clock::now();

  auto handle = std::make_shared<ga::CachingPolicyHandle>(target);
  AttackReport report;
  report.method = cfg.method;
  report.agent_kind = cfg.agent_kind;
  if (truth) report.truth = *truth;

  for (int s = 0; s < cfg.seeds; ++s) {
    const std::uint64_t run_seed =
        derive_seed(cfg.base_seed, {kSeedLabel, static_cast<std::uint64_t>(s)});
    // Fresh evaluator per run: identical fitness semantics, but evaluation
    // counts and timings stay attributable to the run.
    ga::FitnessEvaluator evaluator(handle, cfg.fitness);
    const auto run_started = std::chrono::steady_clock::now();
    SeedOutcome outcome;
    outcome.seed = run_seed;
    switch (cfg.method) {
      case Method::Ga: {
        ga::GaConfig ga_cfg = cfg.ga;
        ga_cfg.seed = run_seed;
        ga_cfg.jobs = cfg.jobs;
        ga::GaResult result = ga::ga_search(evaluator, ga_cfg, truth);
        outcome.best_score = result.best_score;
        outcome.best_map = std::move(result.best_map);
        outcome.history = std::move(result.history);
        outcome.evaluations = result.evaluations;
        break;
      }
      case Method::Random: {
        baseline::RandomSearchResult result = baseline::random_search(
            evaluator, cfg.ga.space, cfg.random_density, cfg.random_budget, run_seed, cfg.jobs);
        outcome.best_score = result.best_score;
        outcome.best_map = std::move(result.best_map);
        outcome.best_curve = std::move(result.best_curve);
        outcome.evaluations = static_cast<std::uint64_t>(result.evaluations);
        break;
      }
      case Method::Rl: {
        baseline::RlSearchResult result = baseline::rl_search(evaluator, cfg.ga.space, cfg.rl, run_seed);
        outcome.best_score = result.best_score;
        outcome.best_map = std::move(result.best_map);
        outcome.best_curve = std::move(result.best_curve);
        outcome.evaluations = static_cast<std::uint64_t>(result.evaluations);
        break;
      }
    }
    outcome.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - run_started).count();
    if (truth) outcome.recovery = ga::recovery_rate(outcome.best_map, *truth);
    report.per_seed.push_back(std::move(outcome));
  }

  report.best_index = 0;
  for (int s = 1; s < cfg.seeds; ++s) {
    if (report.per_seed[s].best_score > report.per_seed[report.best_index].best_score) {
      report.best_index = s;
    }
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

nlohmann::json attack_report_to_json(const AttackReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "attack";
  doc["environment"] = "Grid World";
  doc["task"] = "Transition Dynamics Search";
  doc["method"] = method_name(report.method);
  doc["agent_kind"] = report.agent_kind;
  doc["target_policy"] = report.target_policy_path;
  doc["config"] = report.config_echo;
  doc["wall_clock_seconds"] = report.wall_clock_seconds;
  if (report.truth) doc["truth_map"] = map_rows(*report.truth);

  nlohmann::json seeds = nlohmann::json::array();
  for (const SeedOutcome& outcome : report.per_seed) {
    nlohmann::json entry;
    entry["seed"] = outcome.seed;
    entry["best_score"] = outcome.best_score;
    if (outcome.recovery >= 0.0) entry["recovery_rate"] = outcome.recovery;
    entry["evaluations"] = outcome.evaluations;
    entry["seconds"] = outcome.seconds;
    if (!outcome.history.generations.empty()) {
      nlohmann::json history;
      std::vector<double> mean_fitness, best_fitness, mean_recovery;
      for (const ga::GaGenerationStats& g : outcome.history.generations) {
        mean_fitness.push_back(g.mean_fitness);
        best_fitness.push_back(g.best_fitness);
        mean_recovery.push_back(g.mean_recovery);
      }
      history["mean_fitness"] = mean_fitness;
      history["best_fitness"] = best_fitness;
      if (report.truth) history["mean_recovery"] = mean_recovery;
      entry["history"] = std::move(history);
    }
    if (!outcome.best_curve.empty()) {
      nlohmann::json curve = nlohmann::json::array();
      for (const auto& [at, score] : outcome.best_curve) curve.push_back({at, score});
      entry["best_curve"] = std::move(curve);
    }
    seeds.push_back(std::move(entry));
  }
  doc["per_seed"] = std::move(seeds);
  doc["best_seed_index"] = report.best_index;
  doc["best_score"] = report.best().best_score;
  if (report.best().recovery >= 0.0) doc["best_recovery_rate"] = report.best().recovery;
  doc["chosen_map"] = map_rows(report.best().best_map);
  return doc;
}

void save_attack_report(const AttackReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_attack_report: cannot open " + path);
  out << attack_report_to_json(report).dump(2) << '\n';
  if (!out) throw std::runtime_error("save_attack_report: write failed for " + path);
}

nlohmann::json load_report_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_report_json: cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  return doc;
}

}  // namespace dynsleuth::attack
