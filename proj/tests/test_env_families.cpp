#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>

#include "dynsleuth/env_families.hpp"

using namespace dynsleuth;
using namespace dynsleuth::envs;

TEST_CASE("pointbot equilibrium: zero action and zero velocity stay put") {
  const PointBotParams params;
  const PointBotStepResult r = pointbot_step(params, {0.0, 0.0}, 0.0, 0);
  CHECK(r.state.x == 0.0);
  CHECK(r.state.v == 0.0);
  CHECK(r.reward == 0.0);
  CHECK_FALSE(r.done);
}

TEST_CASE("frictionless constant throttle integrates to v = k * dt") {
  PointBotParams params;
  params.friction = 0.0;
  PointBotState state;
  for (int k = 1; k <= 50; ++k) {
    const PointBotStepResult r = pointbot_step(params, state, 1.0, k - 1);
    state = r.state;
    CHECK(state.v == doctest::Approx(k * kPointBotDt).epsilon(1e-12));
  }
}

TEST_CASE("doubling mass halves acceleration") {
  PointBotParams light;
  PointBotParams heavy;
  heavy.mass = 2.0;
  const PointBotState start{1.0, 0.5};
  const double dv_light = pointbot_step(light, start, 0.8, 0).state.v - start.v;
  const double dv_heavy = pointbot_step(heavy, start, 0.8, 0).state.v - start.v;
  CHECK(dv_light == doctest::Approx(2.0 * dv_heavy));
}

TEST_CASE("pointbot terminates at the target with a bonus and at the horizon") {
  PointBotParams params;
  const PointBotStepResult win = pointbot_step(params, {9.999, 2.0}, 1.0, 10);
  CHECK(win.done);
  CHECK(win.reward > kPointBotSuccessBonus * 0.9);

  const PointBotStepResult timeout = pointbot_step(params, {0.0, 0.0}, 0.0, kPointBotHorizon - 1);
  CHECK(timeout.done);

  CHECK_THROWS_AS(pointbot_step(params, {std::nan(""), 0.0}, 0.0, 0), std::invalid_argument);
}

TEST_CASE("actions are clamped to [-1, 1]") {
  const PointBotParams params;
  const PointBotStepResult big = pointbot_step(params, {0.0, 0.0}, 25.0, 0);
  const PointBotStepResult one = pointbot_step(params, {0.0, 0.0}, 1.0, 0);
  CHECK(big.state.v == one.state.v);
  CHECK(big.reward == one.reward);
}

TEST_CASE("slipgrid with slip 0 is exactly the deterministic step") {
  const grid::GridMap map = grid::parse_map("G..\n...\n...");
  const grid::MdpSpec spec;
  const SlipGridParams params{map, 0.0, 0.0};
  RngStream rng(5);
  for (int cell = 0; cell < map.cell_count(); ++cell) {
    for (int a = 0; a < grid::kActionCount; ++a) {
      const grid::StepResult plain = grid::step(map, spec, cell, static_cast<grid::Action>(a));
      const grid::StepResult slippery =
          slipgrid_step(params, spec, cell, static_cast<grid::Action>(a), rng);
      CHECK(plain.next_cell == slippery.next_cell);
      CHECK(plain.reward == slippery.reward);
      CHECK(plain.done == slippery.done);
    }
  }
}

TEST_CASE("slip 1 replaces a move by each perpendicular with frequency one half") {
  // 5x5 empty map, agent at the center, MoveUp slips to left/right.
  grid::GridMap map;
  map.width = 5;
  map.height = 5;
  map.cells.assign(25, 0);
  map.goal = 0;
  const grid::MdpSpec spec;
  const SlipGridParams params{map, 1.0, 0.0};
  const int center = map.index(2, 2);
  RngStream rng(99);
  int left = 0, right = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const grid::StepResult r = slipgrid_step(params, spec, center, grid::Action::MoveUp, rng);
    if (r.next_cell == map.index(2, 1)) ++left;
    if (r.next_cell == map.index(2, 3)) ++right;
  }
  CHECK(left + right == trials);
  // 3 sigma around p = 0.5: sigma = sqrt(n/4).
  const double sigma = std::sqrt(trials / 4.0);
  CHECK(std::abs(left - trials / 2.0) < 3.0 * sigma);
}

TEST_CASE("Stay never slips and move_penalty applies to non-terminal steps") {
  grid::GridMap map;
  map.width = 3;
  map.height = 3;
  map.cells.assign(9, 0);
  map.goal = 8;
  const grid::MdpSpec spec;
  const SlipGridParams params{map, 1.0, -0.01};
  RngStream rng(3);
  for (int t = 0; t < 200; ++t) {
    const grid::StepResult r = slipgrid_step(params, spec, 4, grid::Action::Stay, rng);
    CHECK(r.next_cell == 4);
    CHECK(r.reward == doctest::Approx(spec.reward_penalty - 0.01));
  }
  // Terminal transition skips the move penalty.
  const SlipGridParams no_slip{map, 0.0, -0.01};
  const grid::StepResult reach = slipgrid_step(no_slip, spec, 5, grid::Action::MoveDown, rng);
  CHECK(reach.done);
  CHECK(reach.reward == doctest::Approx(spec.reward_goal));
}

TEST_CASE("builtin pointbot6 has the six labels, each a single-axis change") {
  const CandidateSet set = builtin_candidate_set("pointbot6");
  REQUIRE(set.size() == 6);
  const std::vector<std::string> want = {"LightTorso", "HeavyTorso", "SlipperyJoints",
                                         "RoughJoints", "Weak", "Strong"};
  for (int i = 0; i < 6; ++i) CHECK(set.candidates[i].label == want[i]);

  const PointBotParams base;
  const PointBotParams& light = set.candidates[0].bot;
  CHECK(light.mass != base.mass);
  CHECK(light.friction == base.friction);
  CHECK(light.power == base.power);
  const PointBotParams& strong = set.candidates[5].bot;
  CHECK(strong.mass == base.mass);
  CHECK(strong.friction == base.friction);
  CHECK(strong.power == doctest::Approx(2.0));
}

TEST_CASE("builtin slipgrid6 shares one base map across candidates") {
  const CandidateSet set = builtin_candidate_set("slipgrid6");
  REQUIRE(set.size() == 6);
  for (const DynamicsCandidate& c : set.candidates) {
    CHECK(c.slip.base_map == set.candidates[0].slip.base_map);
    CHECK(grid::validate_constraints(c.slip.base_map).pass());
  }
  CHECK(set.candidates[0].slip.slip_prob == 0.0);
  CHECK(set.candidates[5].slip.slip_prob == doctest::Approx(0.3));

  CHECK_THROWS_AS(builtin_candidate_set("nope"), std::invalid_argument);
}

TEST_CASE("candidate sets round-trip through their file format in order") {
  for (const char* name : {"pointbot6", "slipgrid6", "pointbot_extreme"}) {
    const CandidateSet set = builtin_candidate_set(name);
    const std::string path = std::string("test_env_families_") + name + ".candidates.json";
    save_candidate_set(set, path);
    const CandidateSet loaded = load_candidate_set(path);
    REQUIRE(loaded.size() == set.size());
    CHECK(loaded.family == set.family);
    for (int i = 0; i < set.size(); ++i) {
      CHECK(loaded.candidates[i].label == set.candidates[i].label);
      if (set.family == Family::PointBot) {
        CHECK(loaded.candidates[i].bot.mass == set.candidates[i].bot.mass);
        CHECK(loaded.candidates[i].bot.friction == set.candidates[i].bot.friction);
        CHECK(loaded.candidates[i].bot.power == set.candidates[i].bot.power);
      } else {
        CHECK(loaded.candidates[i].slip.slip_prob == set.candidates[i].slip.slip_prob);
        CHECK(loaded.candidates[i].slip.base_map == set.candidates[i].slip.base_map);
      }
    }
    std::remove(path.c_str());
  }
}

TEST_CASE("slipgrid env enforces the step limit and exposes goal arrival") {
  grid::MdpSpec spec;
  spec.step_limit = 5;
  SlipGridEnv env(SlipGridParams{grid::parse_map("G..\n...\n..."), 0.0, 0.0}, spec);
  RngStream rng(1);
  env.reset_to(8);
  int steps = 0;
  bool done = false;
  while (!done) {
    const EnvStep s = env.step({static_cast<int>(grid::Action::Stay), 0.0}, rng);
    done = s.done;
    ++steps;
  }
  CHECK(steps == 5);
  CHECK_FALSE(env.at_goal());

  env.reset_to(1);
  const EnvStep reach = env.step({static_cast<int>(grid::Action::MoveLeft), 0.0}, rng);
  CHECK(reach.done);
  CHECK(env.at_goal());
}
