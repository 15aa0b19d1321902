#pragma once

#include <string>
#include <vector>

#include "dynsleuth/policy.hpp"
#include "dynsleuth/rng.hpp"

namespace dynsleuth {

struct EnvStep {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
};

/// Episodic environment interface shared by every family, so trainers and the
/// candidate-inference pipeline stay family-agnostic. Environments own their
/// episode state (current position, step counter) and enforce the horizon.
class Env {
 public:
  virtual ~Env() = default;

  virtual int observation_size() const = 0;
  /// Number of discrete actions; 0 means a continuous scalar action.
  virtual int action_count() const = 0;
  virtual std::string input_contract() const = 0;

  virtual std::vector<double> reset(RngStream& rng) = 0;
  virtual EnvStep step(const PolicyAction& action, RngStream& rng) = 0;
};

}  // namespace dynsleuth
