#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynsleuth/baseline_attacks.hpp"
#include "dynsleuth/ga_attack.hpp"

#include "json.hpp"

namespace dynsleuth::attack {

enum class Method { Ga, Random, Rl };

const char* method_name(Method method);
Method method_from_name(const std::string& name);

/// Multi-seed attack protocol shared by the CLI and the acceptance suite:
/// run the chosen searcher once per seed and keep the highest-scored result.
struct AttackConfig {
  Method method = Method::Ga;
  std::string agent_kind = "dqn";  // dqn -> ExactAction, pg -> L2Threshold
  int seeds = 8;
  std::uint64_t base_seed = 0;
  ga::GaConfig ga;
  ga::FitnessConfig fitness;
  baseline::SearchBudget random_budget;
  double random_density = 0.3;
  baseline::RlSearchConfig rl;
  int jobs = 1;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  double best_score = 0.0;
  double recovery = -1.0;  // -1 when no ground truth was supplied
  std::uint64_t evaluations = 0;
  double seconds = 0.0;
  ga::GaHistory history;                              // GA only
  std::vector<std::pair<long, double>> best_curve;    // baselines only
  grid::GridMap best_map;
};

struct AttackReport {
  Method method = Method::Ga;
  std::string agent_kind;
  std::string target_policy_path;
  std::vector<SeedOutcome> per_seed;
  int best_index = 0;
  double wall_clock_seconds = 0.0;
  nlohmann::json config_echo;
  std::optional<grid::GridMap> truth;

  const SeedOutcome& best() const { return per_seed[best_index]; }
};

/// Builds the fitness defaults implied by the agent kind: exact-action match
/// for deterministic (dqn) targets, thresholded L2 over action distributions
/// for stochastic (pg) targets.
ga::FitnessConfig default_fitness_for(const std::string& agent_kind);

AttackReport run_attack(const Policy& target, const AttackConfig& cfg,
                        const grid::GridMap* truth);

nlohmann::json attack_report_to_json(const AttackReport& report);
void save_attack_report(const AttackReport& report, const std::string& path);
nlohmann::json load_report_json(const std::string& path);

}  // namespace dynsleuth::attack
