#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynsleuth/gridworld.hpp"
#include "dynsleuth/policy.hpp"
#include "dynsleuth/rng.hpp"
#include "dynsleuth/trainers.hpp"

namespace dynsleuth::ga {

/// Dimensions and goal position shared by every genome in a run. The goal
/// cell is attacker-known prior knowledge and its bit stays pinned to 0.
struct GenomeSpace {
  int width = 7;
  int height = 7;
  int goal = 0;

  int length() const { return width * height; }
};

/// Candidate map as a 0-1 vector (0 free, 1 wall).
struct MapGenome {
  std::vector<std::uint8_t> bits;

  bool operator==(const MapGenome&) const = default;
};

MapGenome encode(const grid::GridMap& map);
grid::GridMap decode(const GenomeSpace& space, const MapGenome& genome);
bool genome_valid(const GenomeSpace& space, const MapGenome& genome);
MapGenome random_genome(const GenomeSpace& space, double density, RngStream& rng,
                        int max_tries = 1000);

enum class DeltaKind { ExactAction, L2Threshold };
enum class OracleKind { ValueIteration, TrainedAgent };

/// Options for the per-candidate optimal-policy oracle when it is obtained by
/// actually training an agent on the candidate map instead of solving it.
struct TrainedOracleConfig {
  bool use_pg = false;  // false -> DQN
  train::DqnConfig dqn;
  train::PgConfig pg;
  std::uint64_t seed = 0;
};

struct FitnessConfig {
  DeltaKind delta_kind = DeltaKind::ExactAction;
  double epsilon = 0.02;           // L2 threshold
  OracleKind oracle = OracleKind::ValueIteration;
  double temperature = 0.01;       // Boltzmann temperature for the L2 metric
  bool normalize = false;          // divide the score by the free-cell count
  grid::MdpSpec mdp;
  double vi_tolerance = 1e-8;
  TrainedOracleConfig trained;
};

/// Black-box view of the target policy: observations in, actions or action
/// distributions out. The attack never touches policy parameters.
class BlackBoxPolicy {
 public:
  virtual ~BlackBoxPolicy() = default;
  virtual int greedy_action(const grid::LidarObservation& obs) const = 0;
  virtual std::array<double, grid::kActionCount> action_distribution(
      const grid::LidarObservation& obs) const = 0;
};

/// Adapts a loaded Policy to the black-box interface and memoizes responses
/// per observation (the same lidar signature recurs across candidate maps).
/// Safe for concurrent queries.
class CachingPolicyHandle : public BlackBoxPolicy {
 public:
  explicit CachingPolicyHandle(Policy policy);

  int greedy_action(const grid::LidarObservation& obs) const override;
  std::array<double, grid::kActionCount> action_distribution(
      const grid::LidarObservation& obs) const override;

 private:
  struct Entry {
    int greedy;
    std::array<double, grid::kActionCount> dist;
  };
  const Entry& lookup(const grid::LidarObservation& obs) const;

  Policy policy_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, Entry> cache_;
};

/// Eq.-style policy-agreement fitness of a candidate map against the target,
/// with per-map memoization. Parallel scoring is safe; the evaluation counter
/// counts logical score requests (cache hits included) so search budgets are
/// comparable across methods.
class FitnessEvaluator {
 public:
  FitnessEvaluator(std::shared_ptr<const BlackBoxPolicy> target, FitnessConfig cfg);
  virtual ~FitnessEvaluator() = default;

  virtual double score(const grid::GridMap& map) const;
  double score(const GenomeSpace& space, const MapGenome& genome) const;

  std::uint64_t evaluations() const { return evaluations_.load(); }
  const FitnessConfig& config() const { return cfg_; }

 private:
  double compute(const grid::GridMap& map) const;

  std::shared_ptr<const BlackBoxPolicy> target_;
  FitnessConfig cfg_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, double> cache_;
};

/// Sum over the candidate map's free cells of the agreement indicator between
/// the target policy and the candidate's optimal-policy oracle.
double fitness(const MapGenome& genome, const GenomeSpace& space, const BlackBoxPolicy& target,
               const FitnessConfig& cfg);

struct GaConfig {
  int population_size = 64;
  int elite_size = 8;
  int generations = 150;
  double mutation_rate = 0.05;
  std::uint64_t seed = 0;
  GenomeSpace space;
  int max_child_retries = 50;
  double init_density = 0.3;
  int jobs = 1;
};

struct GaGenerationStats {
  double mean_fitness = 0.0;
  double best_fitness = 0.0;
  double mean_recovery = 0.0;  // only when ground truth is supplied
};

struct GaHistory {
  std::vector<GaGenerationStats> generations;
};

struct GaResult {
  grid::GridMap best_map;
  double best_score = 0.0;
  GaHistory history;
  std::uint64_t evaluations = 0;
};

/// Child = parent1[0,a) + parent2[a,b) + parent1[b,end) with 0 <= a <= b <= len
/// drawn uniformly; the goal bit is re-pinned to 0.
MapGenome two_point_crossover(const MapGenome& parent1, const MapGenome& parent2,
                              const GenomeSpace& space, RngStream& rng);

/// Deterministic variant with explicit cut points.
MapGenome two_point_crossover_at(const MapGenome& parent1, const MapGenome& parent2,
                                 const GenomeSpace& space, int a, int b);

/// Flips every non-goal bit independently with probability beta.
MapGenome mutate(const MapGenome& genome, double beta, const GenomeSpace& space, RngStream& rng);

/// Uniformly draws two members (with replacement) and returns the index of the
/// higher-scored one; ties go to the lower population index.
std::size_t tournament_select(const std::vector<double>& scores, RngStream& rng);

/// Elitist generational GA over constraint-valid genomes. Children that fail
/// the constraints are regenerated up to max_child_retries, after which a
/// fresh random valid genome fills the slot.
GaResult ga_search(const FitnessEvaluator& evaluator, const GaConfig& cfg,
                   const grid::GridMap* truth = nullptr);

/// Logical fitness evaluations one ga_search run consumes; used to grant the
/// baselines an equal budget.
std::uint64_t ga_eval_budget(const GaConfig& cfg);

/// Fraction of non-goal cells whose occupancy matches the ground truth.
double recovery_rate(const grid::GridMap& predicted, const grid::GridMap& truth);

}  // namespace dynsleuth::ga
