// dynsleuth: train small RL policies on private environments and attack them
// as black boxes to recover the training environment.

#include <iostream>

#include "CLI11.hpp"
#include "dynsleuth/cli_commands.hpp"
#include "dynsleuth/parallel.hpp"
#include "dynsleuth/version.hpp"

using namespace dynsleuth;

namespace {

std::vector<std::string> collect_argv(int argc, char** argv) {
  return std::vector<std::string>(argv, argv + argc);
}

void add_config_file(CLI::App* cmd) {
  cmd->set_config("--config", "", "key=value config file; flags override file values");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynsleuth: environment-recovery attacks on trained RL policies"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  const std::vector<std::string> argv_echo = collect_argv(argc, argv);

  // ---- gen-maps
  cli::GenMapsOptions gen;
  std::string gen_size = "7x7", gen_goal = "3,3";
  CLI::App* gen_cmd = app.add_subcommand("gen-maps", "generate constraint-valid floor plans");
  gen_cmd->add_option("--count", gen.count, "number of maps");
  gen_cmd->add_option("--size", gen_size, "grid size WxH");
  gen_cmd->add_option("--goal", gen_goal, "goal cell row,col");
  gen_cmd->add_option("--density", gen.density, "obstacle probability per cell");
  gen_cmd->add_option("--max-tries", gen.max_tries, "rejection-sampling budget per map");
  gen_cmd->add_option("--seed", gen.seed, "rng seed");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  add_config_file(gen_cmd);

  // ---- train
  cli::TrainOptions train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "train an attack-target policy");
  train_cmd->add_option("--env", train_opts.env, "grid | slipgrid | pointbot");
  train_cmd->add_option("--algo", train_opts.algo, "dqn | pg | gpg");
  train_cmd->add_option("--map", train_opts.map_path, "map file (grid/slipgrid)");
  train_cmd->add_option("--slip-prob", train_opts.slip_prob, "slip probability (slipgrid)");
  train_cmd->add_option("--move-penalty", train_opts.move_penalty, "per-step penalty (slipgrid)");
  train_cmd->add_option("--candidates", train_opts.candidates_path, "candidate-set file");
  train_cmd->add_option("--candidate", train_opts.candidate_label, "candidate label");
  train_cmd->add_option("--mass", train_opts.mass, "pointbot mass");
  train_cmd->add_option("--friction", train_opts.friction, "pointbot friction");
  train_cmd->add_option("--power", train_opts.power, "pointbot power");
  train_cmd->add_option("--seed", train_opts.seed, "rng seed");
  train_cmd->add_option("--out", train_opts.out_path, "output .policy path")->required();
  train_cmd->add_option("--log", train_opts.log_path, "progress log path");
  train_cmd->add_option("--steps", train_opts.steps_override, "override DQN step budget");
  train_cmd->add_option("--episodes", train_opts.episodes_override, "override episode budget");
  train_cmd->add_option("--target-goal-rate", train_opts.target_goal_rate,
                        "early-stop goal rate (0 disables)");
  train_cmd->add_option("--lr", train_opts.dqn.lr, "DQN learning rate");
  train_cmd->add_option("--pg-lr", train_opts.pg.lr, "PG learning rate");
  train_cmd->add_option("--entropy-coef", train_opts.pg.entropy_coef, "PG entropy bonus");
  add_config_file(train_cmd);

  // ---- attack
  cli::AttackOptions attack_opts;
  std::string attack_size = "7x7", attack_goal = "3,3";
  CLI::App* attack_cmd = app.add_subcommand("attack", "recover the training map from a policy");
  attack_cmd->add_option("--method", attack_opts.method, "ga | random | rl");
  attack_cmd->add_option("--policy", attack_opts.policy_path, "target .policy file")->required();
  attack_cmd->add_option("--agent-kind", attack_opts.agent_kind, "dqn | pg");
  attack_cmd->add_option("--seeds", attack_opts.seeds, "independent runs; best kept");
  attack_cmd->add_option("--seed", attack_opts.seed, "base rng seed");
  attack_cmd->add_option("--truth", attack_opts.truth_path, "ground-truth map for recovery rates");
  attack_cmd->add_option("--size", attack_size, "genome grid size WxH (when no --truth)");
  attack_cmd->add_option("--goal", attack_goal, "goal cell row,col (when no --truth)");
  attack_cmd->add_option("--out", attack_opts.out_path, "report json path")->required();
  attack_cmd->add_option("--population", attack_opts.ga.population_size, "GA population size");
  attack_cmd->add_option("--elite", attack_opts.ga.elite_size, "GA elite size");
  attack_cmd->add_option("--generations", attack_opts.ga.generations, "GA generation limit");
  attack_cmd->add_option("--mutation-rate", attack_opts.ga.mutation_rate, "GA bit-flip rate");
  attack_cmd->add_option("--epsilon", attack_opts.epsilon, "L2 threshold (pg targets)");
  attack_cmd->add_option("--temperature", attack_opts.temperature, "oracle Boltzmann temperature");
  attack_cmd->add_flag("--normalize", attack_opts.normalize, "divide fitness by free-cell count");
  attack_cmd->add_option("--eval-budget", attack_opts.random_budget,
                         "random-search fitness evaluations (default: match GA)");
  attack_cmd->add_option("--rl-steps", attack_opts.rl.total_steps, "RL-search step budget");
  attack_cmd->add_option("--jobs", attack_opts.jobs, "parallel fitness workers")
      ->envname("DYNSLEUTH_JOBS");
  add_config_file(attack_cmd);

  // ---- shadow
  CLI::App* shadow_cmd = app.add_subcommand("shadow", "candidate inference with shadow policies");
  shadow_cmd->require_subcommand(1);

  cli::ShadowExperimentOptions exp_opts;
  CLI::App* exp_cmd = shadow_cmd->add_subcommand("experiment", "full end-to-end inference run");
  exp_cmd->add_option("--set", exp_opts.set_name, "builtin candidate set name");
  exp_cmd->add_option("--candidates", exp_opts.candidates_path, "candidate-set file");
  exp_cmd->add_option("--m", exp_opts.m, "seeds per candidate");
  exp_cmd->add_option("--train-seeds", exp_opts.train_seeds, "seeds used for fitting");
  exp_cmd->add_option("--k", exp_opts.k, "evaluation trials per candidate");
  exp_cmd->add_option("--seed", exp_opts.seed, "rng seed");
  exp_cmd->add_option("--out", exp_opts.out_path, "accuracy report json")->required();
  exp_cmd->add_option("--features-out", exp_opts.features_out, "also write the feature table");
  exp_cmd->add_option("--svm-out", exp_opts.svm_out, "also write the fitted model");
  exp_cmd->add_option("--pointbot-episodes", exp_opts.train_cfg.pointbot.total_episodes,
                      "shadow training episodes (pointbot)");
  exp_cmd->add_option("--slipgrid-episodes", exp_opts.train_cfg.slipgrid_pg.total_episodes,
                      "shadow training episodes (slipgrid)");
  exp_cmd->add_option("--jobs", exp_opts.jobs, "parallel workers")->envname("DYNSLEUTH_JOBS");
  add_config_file(exp_cmd);

  cli::ShadowTrainOptions strain_opts;
  CLI::App* strain_cmd = shadow_cmd->add_subcommand("train", "train shadow policies only");
  strain_cmd->add_option("--set", strain_opts.set_name, "builtin candidate set name");
  strain_cmd->add_option("--candidates", strain_opts.candidates_path, "candidate-set file");
  strain_cmd->add_option("--m", strain_opts.m, "seeds per candidate");
  strain_cmd->add_option("--seed", strain_opts.seed, "rng seed");
  strain_cmd->add_option("--out-dir", strain_opts.out_dir, "policy output directory")->required();
  strain_cmd->add_option("--pointbot-episodes", strain_opts.train_cfg.pointbot.total_episodes,
                         "shadow training episodes (pointbot)");
  strain_cmd->add_option("--slipgrid-episodes", strain_opts.train_cfg.slipgrid_pg.total_episodes,
                         "shadow training episodes (slipgrid)");
  strain_cmd->add_option("--jobs", strain_opts.jobs, "parallel workers")->envname("DYNSLEUTH_JOBS");
  add_config_file(strain_cmd);

  cli::ShadowFeaturesOptions feat_opts;
  CLI::App* feat_cmd = shadow_cmd->add_subcommand("features", "extract reward-statistic features");
  feat_cmd->add_option("--index", feat_opts.index_path, "index.json from shadow train")->required();
  feat_cmd->add_option("--set", feat_opts.set_name, "builtin candidate set name");
  feat_cmd->add_option("--candidates", feat_opts.candidates_path, "candidate-set file");
  feat_cmd->add_option("--k", feat_opts.k, "trials per candidate");
  feat_cmd->add_option("--train-seeds", feat_opts.train_seeds, "split boundary");
  feat_cmd->add_option("--seed", feat_opts.seed, "rng seed");
  feat_cmd->add_option("--out", feat_opts.out_path, "features csv")->required();
  feat_cmd->add_option("--jobs", feat_opts.jobs, "parallel workers")->envname("DYNSLEUTH_JOBS");
  add_config_file(feat_cmd);

  cli::ShadowFitOptions fit_opts;
  CLI::App* fit_cmd = shadow_cmd->add_subcommand("fit", "fit the linear SVM classifier");
  fit_cmd->add_option("--features", fit_opts.features_path, "features csv")->required();
  fit_cmd->add_option("--out", fit_opts.out_path, "model output path")->required();
  fit_cmd->add_flag("--raw", fit_opts.raw, "skip feature standardization");
  fit_cmd->add_option("--C", fit_opts.svm_cfg.C, "SVM C");
  fit_cmd->add_option("--epochs", fit_opts.svm_cfg.epochs, "descent epochs");
  fit_cmd->add_option("--lr", fit_opts.svm_cfg.lr, "descent step size");
  add_config_file(fit_cmd);

  cli::ShadowInferOptions infer_opts;
  CLI::App* infer_cmd = shadow_cmd->add_subcommand("infer", "classify one policy");
  infer_cmd->add_option("--model", infer_opts.model_path, "svm json")->required();
  infer_cmd->add_option("--policy", infer_opts.policy_path, "policy to classify")->required();
  infer_cmd->add_option("--set", infer_opts.set_name, "builtin candidate set name");
  infer_cmd->add_option("--candidates", infer_opts.candidates_path, "candidate-set file");
  infer_cmd->add_option("--k", infer_opts.k, "trials per candidate");
  infer_cmd->add_option("--seed", infer_opts.seed, "rng seed");
  infer_cmd->add_option("--out", infer_opts.out_path, "optional result json");
  add_config_file(infer_cmd);

  // ---- report
  cli::ReportOptions report_opts;
  CLI::App* report_cmd = app.add_subcommand("report", "aggregate reports into a markdown table");
  report_cmd->add_option("--inputs", report_opts.inputs, "attack/inference report jsons")
      ->required()
      ->expected(-1);
  report_cmd->add_option("--out", report_opts.out_path, "markdown output")->required();
  add_config_file(report_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      std::tie(gen.width, gen.height) = cli::parse_size(gen_size);
      std::tie(gen.goal_row, gen.goal_col) = cli::parse_cell(gen_goal);
      gen.argv = argv_echo;
      const auto paths = cli::cmd_gen_maps(gen);
      std::cout << "wrote " << paths.size() << " maps to " << gen.out_dir << '\n';
    } else if (*train_cmd) {
      train_opts.argv = argv_echo;
      const cli::TrainOutcome outcome = cli::cmd_train(train_opts);
      std::cout << "policy written to " << train_opts.out_path;
      if (outcome.goal_rate >= 0.0) std::cout << " (goal rate " << outcome.goal_rate << ")";
      std::cout << '\n';
    } else if (*attack_cmd) {
      if (attack_opts.truth_path.empty()) {
        std::tie(attack_opts.width, attack_opts.height) = cli::parse_size(attack_size);
        std::tie(attack_opts.goal_row, attack_opts.goal_col) = cli::parse_cell(attack_goal);
      }
      attack_opts.argv = argv_echo;
      const attack::AttackReport report = cli::cmd_attack(attack_opts);
      std::cout << "best score " << report.best().best_score;
      if (report.best().recovery >= 0.0) std::cout << ", recovery " << report.best().recovery;
      std::cout << "; report written to " << attack_opts.out_path << '\n';
    } else if (*shadow_cmd) {
      if (*exp_cmd) {
        exp_opts.argv = argv_echo;
        const shadow::InferenceReport report = cli::cmd_shadow_experiment(exp_opts);
        std::cout << "macro-average accuracy " << report.macro_average << "; report written to "
                  << exp_opts.out_path << '\n';
      } else if (*strain_cmd) {
        strain_opts.argv = argv_echo;
        std::cout << "index written to " << cli::cmd_shadow_train(strain_opts) << '\n';
      } else if (*feat_cmd) {
        feat_opts.argv = argv_echo;
        cli::cmd_shadow_features(feat_opts);
        std::cout << "features written to " << feat_opts.out_path << '\n';
      } else if (*fit_cmd) {
        fit_opts.argv = argv_echo;
        cli::cmd_shadow_fit(fit_opts);
        std::cout << "model written to " << fit_opts.out_path << '\n';
      } else if (*infer_cmd) {
        infer_opts.argv = argv_echo;
        const auto [index, label] = cli::cmd_shadow_infer(infer_opts);
        std::cout << "predicted candidate: " << label << " (index " << index << ")\n";
      }
    } else if (*report_cmd) {
      report_opts.argv = argv_echo;
      std::cout << cli::cmd_report(report_opts);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
