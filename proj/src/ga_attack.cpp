#include "dynsleuth/ga_attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "dynsleuth/env_families.hpp"
#include "dynsleuth/parallel.hpp"

namespace dynsleuth::ga {
namespace {

constexpr std::uint64_t kInitLabel = 0x67612D696E6974;    // ga-init
constexpr std::uint64_t kChildLabel = 0x67612D6368696C;   // ga-chil
constexpr std::uint64_t kFreshLabel = 0x67612D66726573;   // ga-fres

std::string obs_key(const grid::LidarObservation& obs) {
  std::string key(sizeof(obs.distances), '\0');
  std::memcpy(key.data(), obs.distances.data(), sizeof(obs.distances));
  return key;
}

std::string map_key(const grid::GridMap& map) {
  std::string key;
  key.reserve(map.cells.size() + 12);
  key.append(reinterpret_cast<const char*>(&map.width), sizeof(int));
  key.append(reinterpret_cast<const char*>(&map.goal), sizeof(int));
  key.append(reinterpret_cast<const char*>(map.cells.data()), map.cells.size());
  return key;
}

double l2_distance(const std::array<double, grid::kActionCount>& a,
                   const std::array<double, grid::kActionCount>& b) {
  double acc = 0.0;
  for (int i = 0; i < grid::kActionCount; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

MapGenome encode(const grid::GridMap& map) { return MapGenome{map.cells}; }

grid::GridMap decode(const GenomeSpace& space, const MapGenome& genome) {
  if (static_cast<int>(genome.bits.size()) != space.length()) {
    throw std::invalid_argument("decode: genome length does not match space");
  }
  grid::GridMap map;
  map.width = space.width;
  map.height = space.height;
  map.goal = space.goal;
  map.cells = genome.bits;
  map.cells[space.goal] = 0;
  return map;
}

bool genome_valid(const GenomeSpace& space, const MapGenome& genome) {
  return grid::validate_constraints(decode(space, genome)).pass();
}

MapGenome random_genome(const GenomeSpace& space, double density, RngStream& rng, int max_tries) {
  return encode(grid::random_map(space.width, space.height, space.goal, density, rng, max_tries));
}

CachingPolicyHandle::CachingPolicyHandle(Policy policy) : policy_(std::move(policy)) {}

const CachingPolicyHandle::Entry& CachingPolicyHandle::lookup(
    const grid::LidarObservation& obs) const {
  const std::string key = obs_key(obs);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const std::vector<double> x(obs.distances.begin(), obs.distances.end());
  Entry entry;
  entry.greedy = policy_.greedy_action(x);
  const std::vector<double> dist = policy_.action_distribution(x);
  std::copy(dist.begin(), dist.end(), entry.dist.begin());
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.emplace(key, entry).first->second;
}

int CachingPolicyHandle::greedy_action(const grid::LidarObservation& obs) const {
  return lookup(obs).greedy;
}

std::array<double, grid::kActionCount> CachingPolicyHandle::action_distribution(
    const grid::LidarObservation& obs) const {
  return lookup(obs).dist;
}

FitnessEvaluator::FitnessEvaluator(std::shared_ptr<const BlackBoxPolicy> target, FitnessConfig cfg)
    : target_(std::move(target)), cfg_(std::move(cfg)) {
  if (!target_) throw std::invalid_argument("FitnessEvaluator: null target");
  if (cfg_.delta_kind == DeltaKind::L2Threshold && cfg_.epsilon <= 0.0) {
    throw std::invalid_argument("FitnessEvaluator: epsilon must be > 0 for the L2 metric");
  }
  if (cfg_.oracle == OracleKind::ValueIteration && cfg_.temperature <= 0.0) {
    throw std::invalid_argument("FitnessEvaluator: temperature must be > 0");
  }
}

double FitnessEvaluator::score(const grid::GridMap& map) const {
  evaluations_.fetch_add(1);
  const std::string key = map_key(map);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const double value = compute(map);
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.emplace(key, value).first->second;
}

double FitnessEvaluator::score(const GenomeSpace& space, const MapGenome& genome) const {
  return score(decode(space, genome));
}

double FitnessEvaluator::compute(const grid::GridMap& map) const {
  double total = 0.0;
  if (cfg_.oracle == OracleKind::ValueIteration) {
    const grid::QTable q = grid::value_iteration(map, cfg_.mdp, cfg_.vi_tolerance);
    std::vector<std::array<double, grid::kActionCount>> oracle_dist;
    if (cfg_.delta_kind == DeltaKind::L2Threshold) {
      oracle_dist = grid::boltzmann_policy(q, cfg_.temperature);
    }
    for (int s = 0; s < q.free_count(); ++s) {
      const grid::LidarObservation obs = grid::lidar(map, q.free_cells[s]);
      if (cfg_.delta_kind == DeltaKind::ExactAction) {
        total += target_->greedy_action(obs) == q.greedy_action(s) ? 1.0 : 0.0;
      } else {
        total += l2_distance(target_->action_distribution(obs), oracle_dist[s]) < cfg_.epsilon
                     ? 1.0
                     : 0.0;
      }
    }
    if (cfg_.normalize && q.free_count() > 0) total /= q.free_count();
    return total;
  }

  // TrainedAgent oracle: fit an agent on the candidate map and compare against
  // its policy. Expensive; intended for fidelity studies on small budgets.
  envs::SlipGridEnv env(envs::SlipGridParams{map, 0.0, 0.0}, cfg_.mdp);
  const Policy oracle = cfg_.trained.use_pg
                            ? train::train_pg(env, cfg_.trained.pg, cfg_.trained.seed)
                            : train::train_dqn(env, cfg_.trained.dqn, cfg_.trained.seed);
  int free_count = 0;
  for (int cell = 0; cell < map.cell_count(); ++cell) {
    if (map.is_obstacle(cell)) continue;
    ++free_count;
    const grid::LidarObservation obs = grid::lidar(map, cell);
    const std::vector<double> x(obs.distances.begin(), obs.distances.end());
    if (cfg_.delta_kind == DeltaKind::ExactAction) {
      total += target_->greedy_action(obs) == oracle.greedy_action(x) ? 1.0 : 0.0;
    } else {
      const std::vector<double> od = oracle.action_distribution(x);
      std::array<double, grid::kActionCount> oracle_dist{};
      std::copy(od.begin(), od.end(), oracle_dist.begin());
      total += l2_distance(target_->action_distribution(obs), oracle_dist) < cfg_.epsilon ? 1.0
                                                                                          : 0.0;
    }
  }
  if (cfg_.normalize && free_count > 0) total /= free_count;
  return total;
}

double fitness(const MapGenome& genome, const GenomeSpace& space, const BlackBoxPolicy& target,
               const FitnessConfig& cfg) {
  const grid::GridMap map = decode(space, genome);
  if (!grid::validate_constraints(map).pass()) {
    throw std::invalid_argument("fitness: candidate violates the map constraints");
  }
  // One-shot scoring without the memo layer.
  struct Ref : BlackBoxPolicy {
    const BlackBoxPolicy* inner;
    int greedy_action(const grid::LidarObservation& o) const override {
      return inner->greedy_action(o);
    }
    std::array<double, grid::kActionCount> action_distribution(
        const grid::LidarObservation& o) const override {
      return inner->action_distribution(o);
    }
  };
  auto ref = std::make_shared<Ref>();
  ref->inner = &target;
  return FitnessEvaluator(ref, cfg).score(map);
}

MapGenome two_point_crossover(const MapGenome& parent1, const MapGenome& parent2,
                              const GenomeSpace& space, RngStream& rng) {
  const int len = static_cast<int>(parent1.bits.size());
  int a = rng.uniform_int(0, len);
  int b = rng.uniform_int(0, len);
  if (a > b) std::swap(a, b);
  return two_point_crossover_at(parent1, parent2, space, a, b);
}

MapGenome two_point_crossover_at(const MapGenome& parent1, const MapGenome& parent2,
                                 const GenomeSpace& space, int a, int b) {
  if (parent1.bits.size() != parent2.bits.size()) {
    throw std::invalid_argument("two_point_crossover: genome length mismatch");
  }
  MapGenome child = parent1;
  for (int i = a; i < b; ++i) child.bits[i] = parent2.bits[i];
  child.bits[space.goal] = 0;
  return child;
}

MapGenome mutate(const MapGenome& genome, double beta, const GenomeSpace& space, RngStream& rng) {
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("mutate: beta outside [0,1]");
  MapGenome out = genome;
  for (std::size_t i = 0; i < out.bits.size(); ++i) {
    if (static_cast<int>(i) == space.goal) continue;
    if (rng.next_double() < beta) out.bits[i] ^= 1;
  }
  out.bits[space.goal] = 0;
  return out;
}

std::size_t tournament_select(const std::vector<double>& scores, RngStream& rng) {
  if (scores.empty()) throw std::invalid_argument("tournament_select: empty population");
  const int hi = static_cast<int>(scores.size()) - 1;
  const std::size_t i = static_cast<std::size_t>(rng.uniform_int(0, hi));
  const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, hi));
  if (scores[i] > scores[j]) return i;
  if (scores[j] > scores[i]) return j;
  return std::min(i, j);
}

std::uint64_t ga_eval_budget(const GaConfig& cfg) {
  // Generation 0 scores the full population; afterwards only the non-elite
  // children are scored.
  return static_cast<std::uint64_t>(cfg.population_size) +
         static_cast<std::uint64_t>(cfg.generations) *
             static_cast<std::uint64_t>(cfg.population_size - cfg.elite_size);
}

GaResult ga_search(const FitnessEvaluator& evaluator, const GaConfig& cfg,
                   const grid::GridMap* truth) {
  if (cfg.elite_size <= 0 || cfg.elite_size >= cfg.population_size) {
    throw std::invalid_argument("ga_search: need 0 < elite_size < population_size");
  }
  if (cfg.mutation_rate < 0.0 || cfg.mutation_rate > 1.0) {
    throw std::invalid_argument("ga_search: mutation_rate outside [0,1]");
  }
  const std::uint64_t evals_before = evaluator.evaluations();
  const int pop_size = cfg.population_size;

  std::vector<MapGenome> population(pop_size);
  std::vector<double> scores(pop_size, 0.0);
  for (int i = 0; i < pop_size; ++i) {
    RngStream rng = RngStream(cfg.seed).substream({kInitLabel, static_cast<std::uint64_t>(i)});
    population[i] = random_genome(cfg.space, cfg.init_density, rng);
  }

  auto score_range = [&](const std::vector<std::size_t>& indices) {
    parallel_for(indices.size(), cfg.jobs, [&](std::size_t k) {
      scores[indices[k]] = evaluator.score(cfg.space, population[indices[k]]);
    });
  };
  auto record_stats = [&](GaHistory& history) {
    GaGenerationStats stats;
    stats.best_fitness = *std::max_element(scores.begin(), scores.end());
    stats.mean_fitness = std::accumulate(scores.begin(), scores.end(), 0.0) / pop_size;
    if (truth) {
      double acc = 0.0;
      for (const MapGenome& g : population) acc += recovery_rate(decode(cfg.space, g), *truth);
      stats.mean_recovery = acc / pop_size;
    }
    history.generations.push_back(stats);
  };

  GaResult result;
  {
    std::vector<std::size_t> all(pop_size);
    std::iota(all.begin(), all.end(), std::size_t{0});
    score_range(all);
  }
  record_stats(result.history);

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    // Stable sort keeps ties deterministic by population index.
    std::vector<std::size_t> order(pop_size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<MapGenome> next(pop_size);
    std::vector<double> next_scores(pop_size, 0.0);
    for (int e = 0; e < cfg.elite_size; ++e) {
      next[e] = population[order[e]];
      next_scores[e] = scores[order[e]];
    }

    for (int slot = cfg.elite_size; slot < pop_size; ++slot) {
      bool accepted = false;
      for (int retry = 0; retry < cfg.max_child_retries && !accepted; ++retry) {
        RngStream rng = RngStream(cfg.seed).substream(
            {kChildLabel, static_cast<std::uint64_t>(gen), static_cast<std::uint64_t>(slot),
             static_cast<std::uint64_t>(retry)});
        const std::size_t p1 = tournament_select(scores, rng);
        const std::size_t p2 = tournament_select(scores, rng);
        MapGenome child =
            mutate(two_point_crossover(population[p1], population[p2], cfg.space, rng),
                   cfg.mutation_rate, cfg.space, rng);
        if (genome_valid(cfg.space, child)) {
          next[slot] = std::move(child);
          accepted = true;
        }
      }
      if (!accepted) {
        RngStream rng = RngStream(cfg.seed).substream(
            {kFreshLabel, static_cast<std::uint64_t>(gen), static_cast<std::uint64_t>(slot)});
        next[slot] = random_genome(cfg.space, cfg.init_density, rng);
      }
    }

    population = std::move(next);
    scores = std::move(next_scores);
    std::vector<std::size_t> fresh(pop_size - cfg.elite_size);
    std::iota(fresh.begin(), fresh.end(), static_cast<std::size_t>(cfg.elite_size));
    score_range(fresh);
    record_stats(result.history);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  result.best_map = decode(cfg.space, population[best]);
  result.best_score = scores[best];
  result.evaluations = evaluator.evaluations() - evals_before;
  return result;
}

double recovery_rate(const grid::GridMap& predicted, const grid::GridMap& truth) {
  if (predicted.width != truth.width || predicted.height != truth.height) {
    throw std::invalid_argument("recovery_rate: dimension mismatch");
  }
  if (predicted.goal != truth.goal) {
    throw std::invalid_argument("recovery_rate: goal mismatch");
  }
  const int n = truth.cell_count();
  if (n <= 1) return 1.0;
  int match = 0;
  for (int i = 0; i < n; ++i) {
    if (i == truth.goal) continue;
    if (predicted.cells[i] == truth.cells[i]) ++match;
  }
  return static_cast<double>(match) / static_cast<double>(n - 1);
}

}  // namespace dynsleuth::ga
