#include "dynsleuth/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace dynsleuth::train {
namespace {

std::vector<int> policy_dims(const Env& env, const std::vector<int>& hidden, int output) {
  std::vector<int> dims;
  dims.push_back(env.observation_size());
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  return dims;
}

double discounted_returns(const std::vector<double>& rewards, double gamma,
                          std::vector<double>& returns) {
  returns.assign(rewards.size(), 0.0);
  double acc = 0.0;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * acc;
    returns[t] = acc;
  }
  return returns.empty() ? 0.0 : returns.front();
}

}  // namespace

void ReplayBuffer::push(Transition t) {
  if (data_.size() == capacity_) data_.pop_front();
  data_.push_back(std::move(t));
}

const Transition& ReplayBuffer::sample(RngStream& rng) const {
  return data_[rng.uniform_int(0, static_cast<int>(data_.size()) - 1)];
}

RewardStats reward_stats_from(std::vector<double> returns) {
  RewardStats stats;
  stats.returns = std::move(returns);
  if (stats.returns.empty()) return stats;
  const double n = static_cast<double>(stats.returns.size());
  for (double r : stats.returns) stats.mean += r;
  stats.mean /= n;
  for (double r : stats.returns) stats.variance += (r - stats.mean) * (r - stats.mean);
  stats.variance /= n;
  return stats;
}

double epsilon_at(const DqnConfig& cfg, long step) {
  if (cfg.eps_decay_end_step <= 0 || step >= cfg.eps_decay_end_step) return cfg.eps_end;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.eps_decay_end_step);
  return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}

Policy train_dqn(Env& env, const DqnConfig& cfg, std::uint64_t seed, const Checkpoint& checkpoint) {
  if (env.action_count() < 1) throw std::invalid_argument("train_dqn: discrete env required");
  if (cfg.eps_start < cfg.eps_end || cfg.eps_end < 0.0) {
    throw std::invalid_argument("train_dqn: need eps_start >= eps_end >= 0");
  }
  if (cfg.eps_decay_end_step > cfg.total_steps && cfg.total_steps > 0) {
    // Allowed: the schedule simply never reaches eps_end within the budget.
  }
  const int actions = env.action_count();
  RngStream rng = RngStream(seed).substream({kRolloutLabel});
  RngStream init_rng = RngStream(seed).substream({kNetInitLabel});

  Policy policy;
  policy.head = PolicyHead::QValues;
  policy.input_contract = env.input_contract();
  policy.params = nn::mlp_init(policy_dims(env, cfg.hidden, actions), init_rng);
  nn::MlpParams target = policy.params;

  nn::OptimizerConfig opt{nn::OptAlgo::Adam, cfg.lr};
  nn::OptimizerState opt_state = nn::OptimizerState::zeros_like(policy.params);
  nn::MlpGrads grads = nn::MlpGrads::zeros_like(policy.params);

  ReplayBuffer replay(static_cast<std::size_t>(cfg.replay_capacity));
  std::vector<double> obs = env.reset(rng);

  for (long step = 0; step < cfg.total_steps; ++step) {
    const double eps = epsilon_at(cfg, step);
    int action;
    if (rng.next_double() < eps) {
      action = rng.uniform_int(0, actions - 1);
    } else {
      action = policy.greedy_action(obs);
    }
    EnvStep es = env.step({action, 0.0}, rng);
    replay.push({obs, action, es.reward, es.obs, es.done});
    obs = es.done ? env.reset(rng) : std::move(es.obs);

    if (replay.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      grads.fill_zero();
      for (int b = 0; b < cfg.batch_size; ++b) {
        const Transition& t = replay.sample(rng);
        nn::ForwardTrace trace;
        const std::vector<double> q = nn::forward_trace(policy.params, t.obs, trace);
        double target_value = t.reward;
        if (!t.done) {
          const std::vector<double> qn = nn::forward(target, t.next_obs);
          target_value += cfg.gamma * *std::max_element(qn.begin(), qn.end());
        }
        std::vector<double> upstream(q.size(), 0.0);
        upstream[t.action] = 2.0 * (q[t.action] - target_value) / cfg.batch_size;
        nn::backward(policy.params, trace, upstream, grads);
      }
      nn::optimizer_step(policy.params, grads, opt, opt_state);
    }

    if (cfg.target_sync_interval > 0 && (step + 1) % cfg.target_sync_interval == 0) {
      target = policy.params;
    }
    if (checkpoint && cfg.eval_interval > 0 && (step + 1) % cfg.eval_interval == 0) {
      if (checkpoint(step + 1, eps, policy)) return policy;
    }
  }
  return policy;
}

nn::MlpGrads pg_episode_gradient(const nn::MlpParams& params,
                                 const std::vector<std::vector<double>>& observations,
                                 const std::vector<int>& actions,
                                 const std::vector<double>& advantages, double entropy_coef) {
  nn::MlpGrads grads = nn::MlpGrads::zeros_like(params);
  for (std::size_t t = 0; t < observations.size(); ++t) {
    nn::ForwardTrace trace;
    const std::vector<double> logits = nn::forward_trace(params, observations[t], trace);
    const std::vector<double> p = nn::softmax(logits);
    double entropy = 0.0;
    for (double pi : p) {
      if (pi > 0.0) entropy -= pi * std::log(pi);
    }
    // Gradient of -(advantage * log pi(a|s) + entropy_coef * H(pi)) wrt logits.
    std::vector<double> upstream(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double onehot = static_cast<int>(i) == actions[t] ? 1.0 : 0.0;
      const double dlogp = onehot - p[i];
      const double dentropy = -p[i] * (std::log(std::max(p[i], 1e-300)) + entropy);
      upstream[i] = -(advantages[t] * dlogp + entropy_coef * dentropy);
    }
    nn::backward(params, trace, upstream, grads);
  }
  return grads;
}

Policy train_pg(Env& env, const PgConfig& cfg, std::uint64_t seed, const Checkpoint& checkpoint) {
  if (env.action_count() < 1) throw std::invalid_argument("train_pg: discrete env required");
  RngStream rng = RngStream(seed).substream({kRolloutLabel});
  RngStream init_rng = RngStream(seed).substream({kNetInitLabel});

  Policy policy;
  policy.head = PolicyHead::Logits;
  policy.input_contract = env.input_contract();
  policy.params = nn::mlp_init(policy_dims(env, cfg.hidden, env.action_count()), init_rng);

  nn::OptimizerConfig opt{nn::OptAlgo::Adam, cfg.lr};
  nn::OptimizerState opt_state = nn::OptimizerState::zeros_like(policy.params);

  double baseline = 0.0;
  bool baseline_ready = false;
  std::vector<std::vector<double>> observations;
  std::vector<int> actions;
  std::vector<double> rewards, returns, advantages;

  for (long episode = 0; episode < cfg.total_episodes; ++episode) {
    observations.clear();
    actions.clear();
    rewards.clear();
    std::vector<double> obs = env.reset(rng);
    bool done = false;
    while (!done) {
      const PolicyAction action = policy.act(obs, rng);
      EnvStep es = env.step(action, rng);
      observations.push_back(std::move(obs));
      actions.push_back(action.discrete);
      rewards.push_back(es.reward);
      obs = std::move(es.obs);
      done = es.done;
    }
    const double episode_return = discounted_returns(rewards, cfg.gamma, returns);
    const double b = baseline_ready ? baseline : 0.0;
    advantages.resize(returns.size());
    for (std::size_t t = 0; t < returns.size(); ++t) advantages[t] = returns[t] - b;

    const nn::MlpGrads grads =
        pg_episode_gradient(policy.params, observations, actions, advantages, cfg.entropy_coef);
    nn::optimizer_step(policy.params, grads, opt, opt_state);

    baseline = baseline_ready ? baseline + cfg.baseline_alpha * (episode_return - baseline)
                              : episode_return;
    baseline_ready = true;

    if (checkpoint && cfg.eval_interval_episodes > 0 &&
        (episode + 1) % cfg.eval_interval_episodes == 0) {
      if (checkpoint(episode + 1, 0.0, policy)) return policy;
    }
  }
  return policy;
}

Policy train_gaussian_pg(Env& env, const GaussianPgConfig& cfg, std::uint64_t seed,
                         const Checkpoint& checkpoint) {
  if (env.action_count() != 0) throw std::invalid_argument("train_gaussian_pg: continuous env required");
  RngStream rng = RngStream(seed).substream({kRolloutLabel});
  RngStream init_rng = RngStream(seed).substream({kNetInitLabel});

  Policy policy;
  policy.head = PolicyHead::Gaussian;
  policy.input_contract = env.input_contract();
  policy.params = nn::mlp_init(policy_dims(env, cfg.hidden, 1), init_rng);
  policy.log_std = cfg.init_log_std;

  nn::OptimizerConfig opt{nn::OptAlgo::Adam, cfg.lr};
  nn::OptimizerState opt_state = nn::OptimizerState::zeros_like(policy.params);
  nn::MlpGrads grads = nn::MlpGrads::zeros_like(policy.params);
  // Separate Adam accumulator for the scalar log-std.
  double ls_m = 0.0, ls_v = 0.0;
  long ls_step = 0;

  double baseline = 0.0;
  bool baseline_ready = false;
  std::vector<std::vector<double>> observations;
  std::vector<double> taken, means, rewards, returns;

  for (long episode = 0; episode < cfg.total_episodes; ++episode) {
    observations.clear();
    taken.clear();
    means.clear();
    rewards.clear();
    std::vector<double> obs = env.reset(rng);
    bool done = false;
    const double sigma = std::exp(policy.log_std);
    while (!done) {
      const double mean = nn::forward(policy.params, obs)[0];
      const double action = mean + sigma * rng.normal();
      EnvStep es = env.step({0, action}, rng);
      observations.push_back(std::move(obs));
      taken.push_back(action);
      means.push_back(mean);
      rewards.push_back(es.reward);
      obs = std::move(es.obs);
      done = es.done;
    }
    const double episode_return = discounted_returns(rewards, cfg.gamma, returns);
    const double b = baseline_ready ? baseline : 0.0;

    grads.fill_zero();
    double log_std_grad = 0.0;
    const double var = sigma * sigma;
    for (std::size_t t = 0; t < observations.size(); ++t) {
      const double adv = returns[t] - b;
      const double diff = taken[t] - means[t];
      nn::ForwardTrace trace;
      nn::forward_trace(policy.params, observations[t], trace);
      const std::vector<double> upstream = {-(adv * diff / var)};
      nn::backward(policy.params, trace, upstream, grads);
      // d log N / d log_std = diff^2/var - 1; entropy of a Gaussian rises
      // linearly in log_std, so the bonus contributes a constant.
      log_std_grad += -(adv * (diff * diff / var - 1.0) + cfg.entropy_coef);
    }
    nn::optimizer_step(policy.params, grads, opt, opt_state);
    ls_step += 1;
    ls_m = opt.beta1 * ls_m + (1.0 - opt.beta1) * log_std_grad;
    ls_v = opt.beta2 * ls_v + (1.0 - opt.beta2) * log_std_grad * log_std_grad;
    const double mhat = ls_m / (1.0 - std::pow(opt.beta1, static_cast<double>(ls_step)));
    const double vhat = ls_v / (1.0 - std::pow(opt.beta2, static_cast<double>(ls_step)));
    policy.log_std -= cfg.lr * mhat / (std::sqrt(vhat) + opt.eps);
    policy.log_std = std::clamp(policy.log_std, -4.0, 1.0);

    baseline = baseline_ready ? baseline + cfg.baseline_alpha * (episode_return - baseline)
                              : episode_return;
    baseline_ready = true;

    if (checkpoint && cfg.eval_interval_episodes > 0 &&
        (episode + 1) % cfg.eval_interval_episodes == 0) {
      if (checkpoint(episode + 1, 0.0, policy)) return policy;
    }
  }
  return policy;
}

RewardStats evaluate_policy(const Policy& policy, Env& env, int episodes, std::uint64_t seed) {
  if (policy.input_contract != env.input_contract()) {
    throw std::invalid_argument("evaluate_policy: policy expects '" + policy.input_contract +
                                "', env provides '" + env.input_contract() + "'");
  }
  RngStream rng(seed);
  std::vector<double> returns;
  returns.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    std::vector<double> obs = env.reset(rng);
    double total = 0.0;
    bool done = false;
    while (!done) {
      const PolicyAction action = policy.act(obs, rng);
      EnvStep es = env.step(action, rng);
      total += es.reward;
      obs = std::move(es.obs);
      done = es.done;
    }
    returns.push_back(total);
  }
  return reward_stats_from(std::move(returns));
}

double grid_goal_rate(const Policy& policy, envs::SlipGridEnv& env, std::uint64_t seed) {
  int reached = 0;
  const std::vector<int>& starts = env.start_cells();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    RngStream rng = RngStream(seed).substream({0x676F616C, i});
    std::vector<double> obs = env.reset_to(starts[i]);
    bool done = false;
    while (!done) {
      const PolicyAction action = policy.act(obs, rng);
      EnvStep es = env.step(action, rng);
      obs = std::move(es.obs);
      done = es.done;
    }
    if (env.at_goal()) ++reached;
  }
  return starts.empty() ? 0.0 : static_cast<double>(reached) / static_cast<double>(starts.size());
}

}  // namespace dynsleuth::train
