#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dynsleuth/env.hpp"
#include "dynsleuth/gridworld.hpp"
#include "dynsleuth/rng.hpp"

namespace dynsleuth::envs {

/// Grid World with slippery moves: with probability slip_prob a move action is
/// replaced by one of its two perpendicular moves (Stay never slips), and every
/// non-terminal step additionally costs move_penalty.
struct SlipGridParams {
  grid::GridMap base_map;
  double slip_prob = 0.0;
  double move_penalty = 0.0;
};

struct PointBotParams {
  double mass = 1.0;
  double friction = 0.5;
  double power = 1.0;
};

enum class Family { SlipGrid, PointBot };

const char* family_name(Family family);
Family family_from_name(const std::string& name);

struct DynamicsCandidate {
  std::string label;
  Family family = Family::PointBot;
  SlipGridParams slip;
  PointBotParams bot;
};

/// Ordered candidate list; the order is normative for feature-vector layout.
struct CandidateSet {
  Family family = Family::PointBot;
  std::vector<DynamicsCandidate> candidates;

  int size() const { return static_cast<int>(candidates.size()); }
};

/// Built-in sets: "pointbot6" (single-axis x0.5 / x2.0 perturbations of
/// mass/friction/power), "pointbot_extreme" (x0.1 / x10), and "slipgrid6"
/// (slip_prob in {0, .05, .1, .15, .2, .3} on a fixed 7x7 map).
CandidateSet builtin_candidate_set(const std::string& name);

void save_candidate_set(const CandidateSet& set, const std::string& path);
CandidateSet load_candidate_set(const std::string& path);

grid::StepResult slipgrid_step(const SlipGridParams& params, const grid::MdpSpec& spec, int cell,
                               grid::Action action, RngStream& rng);

// PointBot dynamics constants; fixed per family because candidate inference
// compares episodic rewards across candidates and needs one reward scale.
inline constexpr double kPointBotDt = 0.05;
inline constexpr int kPointBotHorizon = 200;
inline constexpr double kPointBotTargetX = 10.0;
inline constexpr double kPointBotSuccessBonus = 1.0;
inline constexpr double kPointBotActionCost = 1e-3;

struct PointBotState {
  double x = 0.0;
  double v = 0.0;
};

struct PointBotStepResult {
  PointBotState state;
  double reward = 0.0;
  bool done = false;
};

/// One Euler step: acceleration = (power*a - friction*v)/mass with a clamped
/// to [-1, 1]; reward is progress minus quadratic control cost, +1 bonus on
/// reaching the target. steps_taken counts completed steps this episode.
PointBotStepResult pointbot_step(const PointBotParams& params, PointBotState state, double action,
                                 int steps_taken);

class SlipGridEnv : public Env {
 public:
  SlipGridEnv(SlipGridParams params, grid::MdpSpec spec);

  int observation_size() const override { return 8; }
  int action_count() const override { return grid::kActionCount; }
  std::string input_contract() const override { return "lidar8"; }
  std::vector<double> reset(RngStream& rng) override;
  EnvStep step(const PolicyAction& action, RngStream& rng) override;

  /// Starts an episode at a specific free cell (used for exhaustive rollouts).
  std::vector<double> reset_to(int cell);
  int current_cell() const { return cell_; }
  bool at_goal() const { return cell_ == params_.base_map.goal; }
  const grid::GridMap& map() const { return params_.base_map; }
  const grid::MdpSpec& spec() const { return spec_; }
  const std::vector<int>& start_cells() const { return start_cells_; }

 private:
  SlipGridParams params_;
  grid::MdpSpec spec_;
  std::vector<int> start_cells_;  // free non-goal cells
  int cell_ = 0;
  int steps_ = 0;
};

class PointBotEnv : public Env {
 public:
  explicit PointBotEnv(PointBotParams params) : params_(params) {}

  int observation_size() const override { return 3; }
  int action_count() const override { return 0; }
  std::string input_contract() const override { return "pointbot3"; }
  std::vector<double> reset(RngStream& rng) override;
  EnvStep step(const PolicyAction& action, RngStream& rng) override;

  const PointBotState& state() const { return state_; }

 private:
  std::vector<double> observe() const;

  PointBotParams params_;
  PointBotState state_;
  int steps_ = 0;
};

std::unique_ptr<Env> make_env(const DynamicsCandidate& candidate,
                              const grid::MdpSpec& mdp = grid::MdpSpec{});

}  // namespace dynsleuth::envs
