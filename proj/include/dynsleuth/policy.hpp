#pragma once

#include <string>
#include <vector>

#include "dynsleuth/mlp.hpp"
#include "dynsleuth/rng.hpp"

namespace dynsleuth {

/// QValues: greedy argmax over action values (DQN agents).
/// Logits: softmax action distribution, sampled at rollout time (PG agents).
/// Gaussian: scalar mean plus a learned state-independent log-std.
enum class PolicyHead { QValues, Logits, Gaussian };

const char* head_name(PolicyHead head);
PolicyHead head_from_name(const std::string& name);

struct PolicyAction {
  int discrete = 0;
  double continuous = 0.0;
};

/// A trained policy: network parameters plus the head kind that fixes the
/// action-selection rule, and the input contract tag naming the observation
/// layout it expects ("lidar8", "pointbot3", "mapbits<N>").
struct Policy {
  nn::MlpParams params;
  PolicyHead head = PolicyHead::QValues;
  std::string input_contract;
  double log_std = 0.0;  // Gaussian head only

  std::vector<double> raw_output(const std::vector<double>& obs) const;
  /// Argmax of the raw output; ties resolve to the lowest index.
  int greedy_action(const std::vector<double>& obs) const;
  /// Logits head: softmax; QValues head: one-hot on the greedy action.
  std::vector<double> action_distribution(const std::vector<double>& obs) const;
  /// Rollout action: QValues acts greedily, Logits samples the softmax,
  /// Gaussian samples mean + exp(log_std) * z.
  PolicyAction act(const std::vector<double>& obs, RngStream& rng) const;

  bool operator==(const Policy&) const = default;
};

int argmax_lowest(const std::vector<double>& values);

/// ".policy" file format v1: magic line, little-endian u32 JSON header length,
/// JSON header {format_version, head, layer_dims, input_contract, has_log_std},
/// then the raw little-endian float64 blob (per layer: weights row-major, then
/// bias; trailing log_std when present). Round-trips bit-exactly.
void save_policy(const Policy& policy, const std::string& path);
Policy load_policy(const std::string& path);

}  // namespace dynsleuth
