#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>

#include "dynsleuth/baseline_attacks.hpp"

using namespace dynsleuth;
using namespace dynsleuth::ga;
using namespace dynsleuth::baseline;

namespace {

class MemorizingTarget : public BlackBoxPolicy {
 public:
  MemorizingTarget(const grid::GridMap& map, const grid::MdpSpec& spec) {
    const grid::QTable q = grid::value_iteration(map, spec, 1e-10);
    for (int s = 0; s < q.free_count(); ++s) {
      std::array<int, 8> key{};
      const grid::LidarObservation obs = grid::lidar(map, q.free_cells[s]);
      for (int i = 0; i < 8; ++i) key[i] = static_cast<int>(obs.distances[i]);
      table_[key] = q.greedy_action(s);
    }
  }
  int greedy_action(const grid::LidarObservation& obs) const override {
    std::array<int, 8> key{};
    for (int i = 0; i < 8; ++i) key[i] = static_cast<int>(obs.distances[i]);
    auto it = table_.find(key);
    return it == table_.end() ? 0 : it->second;
  }
  std::array<double, grid::kActionCount> action_distribution(
      const grid::LidarObservation& obs) const override {
    std::array<double, grid::kActionCount> dist{};
    dist[greedy_action(obs)] = 1.0;
    return dist;
  }

 private:
  std::map<std::array<int, 8>, int> table_;
};

}  // namespace

TEST_CASE("rl search config defaults match the published schedule") {
  const RlSearchConfig cfg;
  CHECK(cfg.total_steps == 250000);
  CHECK(cfg.eps_start == 1.0);
  CHECK(cfg.eps_end == 0.02);
  CHECK(cfg.eps_decay_end_step == 240000);
  CHECK(cfg.episode_limit == 100);
  CHECK(cfg.hidden == std::vector<int>{64, 64});
  // 7x7 flip-MDP: 49-dim state, 49 actions.
  const GenomeSpace space{7, 7, 24};
  CHECK(space.length() == 49);
}

TEST_CASE("random_search basics: budget one, zero budget, determinism") {
  RngStream rng(9);
  const grid::GridMap truth = grid::random_map(7, 7, 24, 0.3, rng);
  auto target = std::make_shared<MemorizingTarget>(truth, grid::MdpSpec{});
  FitnessConfig fitness_cfg;
  const GenomeSpace space{7, 7, 24};

  FitnessEvaluator evaluator(target, fitness_cfg);
  SearchBudget one;
  one.max_evaluations = 1;
  const RandomSearchResult single = random_search(evaluator, space, 0.3, one, 5);
  CHECK(single.evaluations == 1);
  CHECK(single.best_curve.size() == 1);
  CHECK(grid::validate_constraints(single.best_map).pass());
  CHECK(evaluator.evaluations() == 1);

  SearchBudget zero;
  zero.max_evaluations = 0;
  CHECK_THROWS_AS(random_search(evaluator, space, 0.3, zero, 5), std::invalid_argument);

  FitnessEvaluator eval_a(target, fitness_cfg), eval_b(target, fitness_cfg);
  SearchBudget budget;
  budget.max_evaluations = 300;
  const RandomSearchResult a = random_search(eval_a, space, 0.3, budget, 5, 1);
  const RandomSearchResult b = random_search(eval_b, space, 0.3, budget, 5, 4);
  CHECK(a.best_map == b.best_map);  // worker count cannot change the result
  CHECK(a.best_score == b.best_score);
}

TEST_CASE("random_search best score is monotone in the budget for a fixed seed") {
  RngStream rng(10);
  const grid::GridMap truth = grid::random_map(7, 7, 30, 0.3, rng);
  auto target = std::make_shared<MemorizingTarget>(truth, grid::MdpSpec{});
  const GenomeSpace space{7, 7, 30};

  double previous = -1.0;
  for (long budget_size : {50L, 150L, 400L}) {
    FitnessEvaluator evaluator(target, FitnessConfig{});
    SearchBudget budget;
    budget.max_evaluations = budget_size;
    const RandomSearchResult r = random_search(evaluator, space, 0.3, budget, 123);
    CHECK(r.best_score >= previous);
    CHECK(r.evaluations == budget_size);
    previous = r.best_score;
    double curve_best = -1.0;
    for (const auto& [at, score] : r.best_curve) {
      CHECK(score > curve_best);  // curve records strict improvements
      curve_best = score;
    }
  }
}

TEST_CASE("random_search finds the global optimum of a tiny instance") {
  // 3x3, one obstacle: brute-force the best achievable fitness first.
  grid::GridMap truth;
  truth.width = truth.height = 3;
  truth.cells.assign(9, 0);
  truth.cells[4] = 1;
  truth.goal = 2;
  auto target = std::make_shared<MemorizingTarget>(truth, grid::MdpSpec{});
  const GenomeSpace space{3, 3, 2};

  FitnessEvaluator brute(target, FitnessConfig{});
  int valid_count = 0;
  double best_possible = -1.0;
  for (int mask = 0; mask < 512; ++mask) {
    MapGenome g;
    g.bits.resize(9);
    for (int i = 0; i < 9; ++i) g.bits[i] = (mask >> i) & 1;
    if (g.bits[space.goal] || !genome_valid(space, g)) continue;
    ++valid_count;
    best_possible = std::max(best_possible, brute.score(space, g));
  }

  FitnessEvaluator evaluator(target, FitnessConfig{});
  SearchBudget budget;
  budget.max_evaluations = valid_count * 10;
  const RandomSearchResult r = random_search(evaluator, space, 0.25, budget, 7);
  CHECK(r.best_score == doctest::Approx(best_possible));
}

TEST_CASE("rl_search returns a valid map, tracks its best monotonically") {
  RngStream rng(21);
  const grid::GridMap truth = grid::random_map(7, 7, 24, 0.3, rng);
  auto target = std::make_shared<MemorizingTarget>(truth, grid::MdpSpec{});
  const GenomeSpace space{7, 7, 24};

  FitnessEvaluator evaluator(target, FitnessConfig{});
  RlSearchConfig cfg;
  cfg.total_steps = 1500;  // smoke-scale run
  cfg.eps_decay_end_step = 1200;
  cfg.episode_limit = 50;
  const RlSearchResult result = rl_search(evaluator, space, cfg, 3);

  CHECK(grid::validate_constraints(result.best_map).pass());
  CHECK(result.best_score > 0.0);
  CHECK(result.evaluations > 0);
  CHECK(result.evaluations <= cfg.total_steps + 1500 / cfg.episode_limit + 1);
  double best = -1.0;
  for (const auto& [at, score] : result.best_curve) {
    CHECK(score > best);
    best = score;
  }
  CHECK(best == doctest::Approx(result.best_score));

  // Deterministic per seed.
  FitnessEvaluator eval_b(target, FitnessConfig{});
  const RlSearchResult again = rl_search(eval_b, space, cfg, 3);
  CHECK(again.best_map == result.best_map);
  CHECK(again.best_score == result.best_score);
}

TEST_CASE("rl_search delta-reward variant also runs clean") {
  RngStream rng(22);
  const grid::GridMap truth = grid::random_map(7, 7, 10, 0.3, rng);
  auto target = std::make_shared<MemorizingTarget>(truth, grid::MdpSpec{});
  FitnessEvaluator evaluator(target, FitnessConfig{});
  RlSearchConfig cfg;
  cfg.total_steps = 600;
  cfg.eps_decay_end_step = 500;
  cfg.delta_reward = true;
  const RlSearchResult result = rl_search(evaluator, GenomeSpace{7, 7, 10}, cfg, 4);
  CHECK(grid::validate_constraints(result.best_map).pass());
}
