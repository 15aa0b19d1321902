#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "dynsleuth/env.hpp"
#include "dynsleuth/env_families.hpp"
#include "dynsleuth/policy.hpp"

namespace dynsleuth::train {

struct DqnConfig {
  long total_steps = 150000;
  double eps_start = 1.0;
  double eps_end = 0.02;
  long eps_decay_end_step = 100000;
  int replay_capacity = 10000;
  int batch_size = 32;
  int target_sync_interval = 500;
  double gamma = 0.95;
  double lr = 1e-3;
  std::vector<int> hidden = {64, 64};
  // Convergence checkpoints: the caller's checkpoint callback runs every
  // eval_interval env steps and may stop training early.
  long eval_interval = 5000;
};

struct PgConfig {
  long total_episodes = 20000;
  double gamma = 0.95;
  double lr = 3e-4;
  double entropy_coef = 0.01;
  double baseline_alpha = 0.05;  // moving average rate for the return baseline
  std::vector<int> hidden = {64, 64};
  long eval_interval_episodes = 1000;
};

struct GaussianPgConfig {
  long total_episodes = 400;
  double gamma = 0.99;
  double lr = 3e-3;
  double entropy_coef = 1e-3;
  double baseline_alpha = 0.05;
  double init_log_std = -0.5;
  std::vector<int> hidden = {32, 32};
  long eval_interval_episodes = 0;  // 0 = no checkpoints
};

/// Per-trial episodic returns with their mean and population variance.
struct RewardStats {
  std::vector<double> returns;
  double mean = 0.0;
  double variance = 0.0;
};

struct Transition {
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

/// Fixed-capacity FIFO replay buffer with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }
  const Transition& sample(RngStream& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> data_;
};

RewardStats reward_stats_from(std::vector<double> returns);

/// Checkpoint callback: (env steps or episodes completed, exploration rate,
/// greedy policy snapshot) -> return true to stop training early.
using Checkpoint = std::function<bool(long progress, double epsilon, const Policy& policy)>;

/// Linear schedule: eps_start at step 0 down to eps_end at eps_decay_end_step,
/// flat afterwards.
double epsilon_at(const DqnConfig& cfg, long step);

/// DQN with uniform replay and a periodically synced target network. Episodes
/// reset to a uniformly random start state. Returns the greedy policy.
Policy train_dqn(Env& env, const DqnConfig& cfg, std::uint64_t seed,
                 const Checkpoint& checkpoint = nullptr);

/// REINFORCE: full-episode rollouts, discounted return minus a moving-average
/// baseline, entropy bonus for exploration. Returns the stochastic policy.
Policy train_pg(Env& env, const PgConfig& cfg, std::uint64_t seed,
                const Checkpoint& checkpoint = nullptr);

/// REINFORCE with a Gaussian action head (state-dependent mean, learned
/// state-independent log-std) for continuous-control families.
Policy train_gaussian_pg(Env& env, const GaussianPgConfig& cfg, std::uint64_t seed,
                         const Checkpoint& checkpoint = nullptr);

/// k rollouts; stochastic heads sample, the QValues head acts greedily.
/// Returns undiscounted episodic returns with mean and population variance.
RewardStats evaluate_policy(const Policy& policy, Env& env, int episodes, std::uint64_t seed);

/// Fraction of free non-goal start cells from which one (seeded) rollout
/// reaches the goal within the step limit.
double grid_goal_rate(const Policy& policy, envs::SlipGridEnv& env, std::uint64_t seed);

/// Per-episode REINFORCE gradient for a recorded discrete-action episode;
/// exposed so the estimator itself is testable against finite differences.
nn::MlpGrads pg_episode_gradient(const nn::MlpParams& params,
                                 const std::vector<std::vector<double>>& observations,
                                 const std::vector<int>& actions,
                                 const std::vector<double>& advantages, double entropy_coef);

// Substream labels used to fan a training seed out; exposed so tests can
// reconstruct the untrained-network baseline.
inline constexpr std::uint64_t kNetInitLabel = 0x6E6574;   // "net"
inline constexpr std::uint64_t kRolloutLabel = 0x726F6C;   // "rol"

}  // namespace dynsleuth::train
