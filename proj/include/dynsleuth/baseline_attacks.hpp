#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dynsleuth/ga_attack.hpp"

namespace dynsleuth::baseline {

/// Search budget: a fitness-evaluation count (hardware-independent, default)
/// or a wall-clock limit in seconds. Exactly one should be positive.
struct SearchBudget {
  long max_evaluations = 20000;
  double max_seconds = 0.0;
};

struct RandomSearchResult {
  grid::GridMap best_map;
  double best_score = 0.0;
  long evaluations = 0;
  /// (evaluation index, score) recorded whenever the best improves.
  std::vector<std::pair<long, double>> best_curve;
};

/// Draws constraint-valid random maps, scores them with the shared fitness,
/// and keeps the argmax (ties go to the earliest draw).
RandomSearchResult random_search(const ga::FitnessEvaluator& evaluator,
                                 const ga::GenomeSpace& space, double density,
                                 const SearchBudget& budget, std::uint64_t seed, int jobs = 1);

struct RlSearchConfig {
  long total_steps = 250000;
  int episode_limit = 100;
  double eps_start = 1.0;
  double eps_end = 0.02;
  long eps_decay_end_step = 240000;
  std::vector<int> hidden = {64, 64};
  double gamma = 0.95;
  double lr = 1e-3;
  int replay_capacity = 10000;
  int batch_size = 32;
  int target_sync_interval = 500;
  double init_density = 0.3;
  /// false: per-step reward is the absolute fitness of the current map;
  /// true: reward is the fitness improvement over the previous map.
  bool delta_reward = false;
};

struct RlSearchResult {
  grid::GridMap best_map;
  double best_score = 0.0;
  long evaluations = 0;
  std::vector<std::pair<long, double>> best_curve;  // (env step, score)
};

/// DQN over the map-flip MDP: the state is the genome bit vector, action i
/// flips cell i (the goal cell is a no-op), flips that violate constraints
/// are reverted at zero reward, and episodes restart from a random valid map.
/// Returns the best-scoring valid map ever visited.
RlSearchResult rl_search(const ga::FitnessEvaluator& evaluator, const ga::GenomeSpace& space,
                         const RlSearchConfig& cfg, std::uint64_t seed);

}  // namespace dynsleuth::baseline
