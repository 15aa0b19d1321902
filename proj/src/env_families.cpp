#include "dynsleuth/env_families.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace dynsleuth::envs {
namespace {

// Fixed 7x7 floor plan for the slipgrid candidate family: vertical corridors
// flanked by walls make higher slip probabilities increasingly costly, so
// policies trained at different slip levels route (and perform) differently.
constexpr const char* kSlipGridBaseMap =
    ".......\n"
    ".#####.\n"
    ".......\n"
    ".#.#.#.\n"
    ".#.#.#.\n"
    ".#.#.#.\n"
    "......G";

constexpr double kSlipGridMovePenalty = -0.01;

DynamicsCandidate pointbot_candidate(const std::string& label, double mass, double friction,
                                     double power) {
  DynamicsCandidate c;
  c.label = label;
  c.family = Family::PointBot;
  c.bot = PointBotParams{mass, friction, power};
  return c;
}

}  // namespace

const char* family_name(Family family) {
  switch (family) {
    case Family::SlipGrid: return "slipgrid";
    case Family::PointBot: return "pointbot";
  }
  throw std::logic_error("family_name: unknown family");
}

Family family_from_name(const std::string& name) {
  if (name == "slipgrid") return Family::SlipGrid;
  if (name == "pointbot") return Family::PointBot;
  throw std::invalid_argument("unknown environment family '" + name + "'");
}

CandidateSet builtin_candidate_set(const std::string& name) {
  CandidateSet set;
  const double base_mass = 1.0, base_friction = 0.5, base_power = 1.0;
  if (name == "pointbot6" || name == "pointbot_extreme") {
    const double down = name == "pointbot6" ? 0.5 : 0.1;
    const double up = name == "pointbot6" ? 2.0 : 10.0;
    set.family = Family::PointBot;
    set.candidates = {
        pointbot_candidate("LightTorso", base_mass * down, base_friction, base_power),
        pointbot_candidate("HeavyTorso", base_mass * up, base_friction, base_power),
        pointbot_candidate("SlipperyJoints", base_mass, base_friction * down, base_power),
        pointbot_candidate("RoughJoints", base_mass, base_friction * up, base_power),
        pointbot_candidate("Weak", base_mass, base_friction, base_power * down),
        pointbot_candidate("Strong", base_mass, base_friction, base_power * up),
    };
    return set;
  }
  if (name == "slipgrid6") {
    set.family = Family::SlipGrid;
    const grid::GridMap base = grid::parse_map(kSlipGridBaseMap);
    const double slips[] = {0.0, 0.05, 0.1, 0.15, 0.2, 0.3};
    for (double p : slips) {
      DynamicsCandidate c;
      c.label = "Slip" + std::to_string(static_cast<int>(std::lround(p * 100)));
      c.family = Family::SlipGrid;
      c.slip = SlipGridParams{base, p, kSlipGridMovePenalty};
      set.candidates.push_back(std::move(c));
    }
    return set;
  }
  throw std::invalid_argument("unknown candidate set '" + name + "'");
}

void save_candidate_set(const CandidateSet& set, const std::string& path) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["family"] = family_name(set.family);
  nlohmann::json items = nlohmann::json::array();
  for (const DynamicsCandidate& c : set.candidates) {
    nlohmann::json item;
    item["label"] = c.label;
    if (c.family == Family::PointBot) {
      item["mass"] = c.bot.mass;
      item["friction"] = c.bot.friction;
      item["power"] = c.bot.power;
    } else {
      item["slip_prob"] = c.slip.slip_prob;
      item["move_penalty"] = c.slip.move_penalty;
      nlohmann::json rows = nlohmann::json::array();
      for (const std::string& row : [&] {
             std::vector<std::string> out;
             std::string text = grid::render_map(c.slip.base_map);
             std::string line;
             for (char ch : text) {
               if (ch == '\n') {
                 out.push_back(line);
                 line.clear();
               } else {
                 line.push_back(ch);
               }
             }
             out.push_back(line);
             return out;
           }()) {
        rows.push_back(row);
      }
      item["base_map"] = rows;
    }
    items.push_back(std::move(item));
  }
  doc["candidates"] = std::move(items);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_candidate_set: cannot open " + path);
  out << doc.dump(2) << '\n';
}

CandidateSet load_candidate_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_candidate_set: cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  CandidateSet set;
  set.family = family_from_name(doc.at("family").get<std::string>());
  for (const nlohmann::json& item : doc.at("candidates")) {
    DynamicsCandidate c;
    c.label = item.at("label").get<std::string>();
    c.family = set.family;
    if (set.family == Family::PointBot) {
      c.bot.mass = item.at("mass").get<double>();
      c.bot.friction = item.at("friction").get<double>();
      c.bot.power = item.at("power").get<double>();
    } else {
      c.slip.slip_prob = item.at("slip_prob").get<double>();
      c.slip.move_penalty = item.at("move_penalty").get<double>();
      std::string text;
      for (const nlohmann::json& row : item.at("base_map")) {
        if (!text.empty()) text.push_back('\n');
        text += row.get<std::string>();
      }
      c.slip.base_map = grid::parse_map(text);
    }
    set.candidates.push_back(std::move(c));
  }
  if (set.size() < 2) throw std::runtime_error("load_candidate_set: need at least 2 candidates");
  return set;
}

grid::StepResult slipgrid_step(const SlipGridParams& params, const grid::MdpSpec& spec, int cell,
                               grid::Action action, RngStream& rng) {
  grid::Action effective = action;
  if (action != grid::Action::Stay && params.slip_prob > 0.0 && rng.bernoulli(params.slip_prob)) {
    const bool horizontal =
        action == grid::Action::MoveLeft || action == grid::Action::MoveRight;
    const int pick = rng.uniform_int(0, 1);
    if (horizontal) {
      effective = pick == 0 ? grid::Action::MoveUp : grid::Action::MoveDown;
    } else {
      effective = pick == 0 ? grid::Action::MoveLeft : grid::Action::MoveRight;
    }
  }
  grid::StepResult result = grid::step(params.base_map, spec, cell, effective);
  if (!result.done) result.reward += params.move_penalty;
  return result;
}

PointBotStepResult pointbot_step(const PointBotParams& params, PointBotState state, double action,
                                 int steps_taken) {
  if (!std::isfinite(state.x) || !std::isfinite(state.v)) {
    throw std::invalid_argument("pointbot_step: non-finite state");
  }
  const double a = std::clamp(action, -1.0, 1.0);
  const double acceleration = (params.power * a - params.friction * state.v) / params.mass;
  PointBotStepResult out;
  out.state.v = state.v + kPointBotDt * acceleration;
  out.state.x = state.x + kPointBotDt * out.state.v;
  out.reward = (out.state.x - state.x) - kPointBotActionCost * a * a;
  if (out.state.x >= kPointBotTargetX) {
    out.reward += kPointBotSuccessBonus;
    out.done = true;
  } else if (steps_taken + 1 >= kPointBotHorizon) {
    out.done = true;
  }
  return out;
}

SlipGridEnv::SlipGridEnv(SlipGridParams params, grid::MdpSpec spec)
    : params_(std::move(params)), spec_(spec) {
  const grid::GridMap& map = params_.base_map;
  for (int i = 0; i < map.cell_count(); ++i) {
    if (!map.is_obstacle(i) && i != map.goal) start_cells_.push_back(i);
  }
  if (start_cells_.empty()) throw std::invalid_argument("SlipGridEnv: no free start cells");
  cell_ = start_cells_.front();
}

std::vector<double> SlipGridEnv::reset(RngStream& rng) {
  return reset_to(start_cells_[rng.uniform_int(0, static_cast<int>(start_cells_.size()) - 1)]);
}

std::vector<double> SlipGridEnv::reset_to(int cell) {
  if (params_.base_map.is_obstacle(cell)) throw std::invalid_argument("reset_to: obstacle cell");
  cell_ = cell;
  steps_ = 0;
  const grid::LidarObservation obs = grid::lidar(params_.base_map, cell_);
  return {obs.distances.begin(), obs.distances.end()};
}

EnvStep SlipGridEnv::step(const PolicyAction& action, RngStream& rng) {
  const grid::StepResult result =
      slipgrid_step(params_, spec_, cell_, static_cast<grid::Action>(action.discrete), rng);
  cell_ = result.next_cell;
  ++steps_;
  EnvStep out;
  out.reward = result.reward;
  out.done = result.done || steps_ >= spec_.step_limit;
  const grid::LidarObservation obs = grid::lidar(params_.base_map, cell_);
  out.obs.assign(obs.distances.begin(), obs.distances.end());
  return out;
}

std::vector<double> PointBotEnv::reset(RngStream&) {
  state_ = PointBotState{};
  steps_ = 0;
  return observe();
}

std::vector<double> PointBotEnv::observe() const {
  return {state_.x / kPointBotTargetX, state_.v, 1.0};
}

EnvStep PointBotEnv::step(const PolicyAction& action, RngStream&) {
  const PointBotStepResult result = pointbot_step(params_, state_, action.continuous, steps_);
  state_ = result.state;
  ++steps_;
  return {observe(), result.reward, result.done};
}

std::unique_ptr<Env> make_env(const DynamicsCandidate& candidate, const grid::MdpSpec& mdp) {
  if (candidate.family == Family::SlipGrid) {
    return std::make_unique<SlipGridEnv>(candidate.slip, mdp);
  }
  return std::make_unique<PointBotEnv>(candidate.bot);
}

}  // namespace dynsleuth::envs
