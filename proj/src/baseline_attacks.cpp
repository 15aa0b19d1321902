#include "dynsleuth/baseline_attacks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "dynsleuth/mlp.hpp"
#include "dynsleuth/parallel.hpp"

namespace dynsleuth::baseline {
namespace {

constexpr std::uint64_t kSampleLabel = 0x72732D73616D70;  // rs-samp
constexpr std::uint64_t kRlLabel = 0x726C2D73656172;      // rl-sear

}  // namespace

RandomSearchResult random_search(const ga::FitnessEvaluator& evaluator,
                                 const ga::GenomeSpace& space, double density,
                                 const SearchBudget& budget, std::uint64_t seed, int jobs) {
  if (budget.max_evaluations <= 0 && budget.max_seconds <= 0.0) {
    throw std::invalid_argument("random_search: budget must be positive");
  }
  const auto started = std::chrono::steady_clock::now();
  auto seconds_spent = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  RandomSearchResult result;
  bool have_best = false;
  long index = 0;
  constexpr long kChunk = 128;
  std::vector<grid::GridMap> maps;
  std::vector<double> scores;
  while (true) {
    if (budget.max_evaluations > 0 && index >= budget.max_evaluations) break;
    if (budget.max_seconds > 0.0 && seconds_spent() >= budget.max_seconds) break;
    long chunk = kChunk;
    if (budget.max_evaluations > 0) chunk = std::min(chunk, budget.max_evaluations - index);
    maps.resize(chunk);
    scores.assign(chunk, 0.0);
    // Per-index substreams keep the draw sequence independent of worker count.
    parallel_for(static_cast<std::size_t>(chunk), jobs, [&](std::size_t k) {
      RngStream rng = RngStream(seed).substream(
          {kSampleLabel, static_cast<std::uint64_t>(index + static_cast<long>(k))});
      maps[k] = grid::random_map(space.width, space.height, space.goal, density, rng);
      scores[k] = evaluator.score(maps[k]);
    });
    for (long k = 0; k < chunk; ++k) {
      if (!have_best || scores[k] > result.best_score) {
        result.best_score = scores[k];
        result.best_map = maps[k];
        result.best_curve.emplace_back(index + k + 1, scores[k]);
        have_best = true;
      }
    }
    index += chunk;
  }
  result.evaluations = index;
  return result;
}

RlSearchResult rl_search(const ga::FitnessEvaluator& evaluator, const ga::GenomeSpace& space,
                         const RlSearchConfig& cfg, std::uint64_t seed) {
  if (cfg.total_steps < 0 || cfg.episode_limit < 1) {
    throw std::invalid_argument("rl_search: invalid step configuration");
  }
  const int len = space.length();
  RngStream rng = RngStream(seed).substream({kRlLabel});

  std::vector<int> dims;
  dims.push_back(len);
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(len);
  RngStream init_rng = RngStream(seed).substream({kRlLabel, 1});
  nn::MlpParams net = nn::mlp_init(dims, init_rng);
  nn::MlpParams target_net = net;
  nn::OptimizerConfig opt{nn::OptAlgo::Adam, cfg.lr};
  nn::OptimizerState opt_state = nn::OptimizerState::zeros_like(net);
  nn::MlpGrads grads = nn::MlpGrads::zeros_like(net);

  struct Transition {
    std::vector<double> state;
    int action;
    double reward;
    std::vector<double> next_state;
    bool done;
  };
  std::deque<Transition> replay;

  const std::uint64_t evals_before = evaluator.evaluations();
  RlSearchResult result;
  bool have_best = false;

  ga::MapGenome genome;
  double current_score = 0.0;
  auto to_state = [&](const ga::MapGenome& g) {
    std::vector<double> s(g.bits.size());
    for (std::size_t i = 0; i < g.bits.size(); ++i) s[i] = static_cast<double>(g.bits[i]);
    return s;
  };
  auto track = [&](const ga::MapGenome& g, double score, long step) {
    if (!have_best || score > result.best_score) {
      result.best_score = score;
      result.best_map = ga::decode(space, g);
      result.best_curve.emplace_back(step, score);
      have_best = true;
    }
  };
  auto new_episode = [&](long step) {
    genome = ga::random_genome(space, cfg.init_density, rng);
    current_score = evaluator.score(space, genome);
    track(genome, current_score, step);
  };

  new_episode(0);
  std::vector<double> state = to_state(genome);
  int episode_steps = 0;

  for (long step = 0; step < cfg.total_steps; ++step) {
    double eps = cfg.eps_end;
    if (cfg.eps_decay_end_step > 0 && step < cfg.eps_decay_end_step) {
      eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * static_cast<double>(step) /
                                static_cast<double>(cfg.eps_decay_end_step);
    }
    int action;
    if (rng.next_double() < eps) {
      action = rng.uniform_int(0, len - 1);
    } else {
      const std::vector<double> q = nn::forward(net, state);
      action = argmax_lowest(q);
    }

    double reward;
    if (action == space.goal) {
      // The goal cell is prior knowledge; flipping it is a no-op on a map we
      // already scored.
      reward = cfg.delta_reward ? 0.0 : current_score;
    } else {
      ga::MapGenome flipped = genome;
      flipped.bits[action] ^= 1;
      if (ga::genome_valid(space, flipped)) {
        const double new_score = evaluator.score(space, flipped);
        reward = cfg.delta_reward ? new_score - current_score : new_score;
        genome = std::move(flipped);
        current_score = new_score;
        track(genome, current_score, step + 1);
      } else {
        reward = 0.0;  // flip reverted; the state never leaves the valid set
      }
    }

    ++episode_steps;
    const bool done = episode_steps >= cfg.episode_limit;
    std::vector<double> next_state = to_state(genome);
    if (replay.size() == static_cast<std::size_t>(cfg.replay_capacity)) replay.pop_front();
    replay.push_back({std::move(state), action, reward, next_state, done});

    if (replay.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      grads.fill_zero();
      for (int b = 0; b < cfg.batch_size; ++b) {
        const Transition& t = replay[rng.uniform_int(0, static_cast<int>(replay.size()) - 1)];
        nn::ForwardTrace trace;
        const std::vector<double> q = nn::forward_trace(net, t.state, trace);
        double y = t.reward;
        if (!t.done) {
          const std::vector<double> qn = nn::forward(target_net, t.next_state);
          y += cfg.gamma * *std::max_element(qn.begin(), qn.end());
        }
        std::vector<double> upstream(q.size(), 0.0);
        upstream[t.action] = 2.0 * (q[t.action] - y) / cfg.batch_size;
        nn::backward(net, trace, upstream, grads);
      }
      nn::optimizer_step(net, grads, opt, opt_state);
    }
    if (cfg.target_sync_interval > 0 && (step + 1) % cfg.target_sync_interval == 0) {
      target_net = net;
    }

    if (done) {
      new_episode(step + 1);
      state = to_state(genome);
      episode_steps = 0;
    } else {
      state = std::move(next_state);
    }
  }

  result.evaluations = static_cast<long>(evaluator.evaluations() - evals_before);
  return result;
}

}  // namespace dynsleuth::baseline
