// flowctl: batch front end for training toy flow-matching fields, sampling
// base and controlled dynamics, adjoint-matching fine-tuning, evaluation,
// and VP-schedule conversion.

#include <CLI11.hpp>

#include "flowctl/runner.hpp"

using namespace flowctl;

int main(int argc, char** argv) {
  CLI::App app{"flow matching under stochastic optimal control, desk scale"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration file")->required();
    cmd->add_option("--out", out_override, "output directory (overrides config out_dir)");
  };

  // train
  auto* train = app.add_subcommand("train", "train a base velocity field");
  std::string train_ckpt_out;
  std::int64_t train_seed = -1;
  add_common(train);
  train->add_option("--checkpoint-out", train_ckpt_out, "checkpoint path");
  train->add_option("--seed", train_seed, "training seed (overrides config)");

  // sample
  auto* sample = app.add_subcommand("sample", "sample base or controlled trajectories");
  std::string sample_mode, sample_ckpt_in;
  std::vector<std::uint64_t> sample_seeds;
  double sample_lambda = -1.0;
  int sample_steps = -1;
  add_common(sample);
  sample->add_option("--mode", sample_mode, "ode|sde")->check(CLI::IsMember({"ode", "sde"}));
  sample->add_option("--steps", sample_steps, "integration steps");
  sample->add_option("--lambda", sample_lambda, "cost weight (overrides the config sweep)");
  sample->add_option("--seed", sample_seeds, "seed (repeatable; overrides config seeds)");
  sample->add_option("--checkpoint-in", sample_ckpt_in, "field checkpoint path");

  // finetune
  auto* finetune = app.add_subcommand("finetune", "adjoint-matching fine-tuning of a control net");
  std::string ft_ckpt_in, ft_ckpt_out;
  double ft_lambda = -1.0;
  int ft_steps = -1, ft_batch = -1, ft_subsample = -1;
  std::int64_t ft_seed = -1;
  add_common(finetune);
  finetune->add_option("--seed", ft_seed, "fine-tuning seed (overrides config)");
  finetune->add_option("--lambda", ft_lambda, "cost weight");
  finetune->add_option("--steps", ft_steps, "optimizer iterations");
  finetune->add_option("--batch", ft_batch, "trajectories per iteration");
  finetune->add_option("--subsample", ft_subsample, "grid steps entering the loss");
  finetune->add_option("--checkpoint-in", ft_ckpt_in, "base field checkpoint");
  finetune->add_option("--checkpoint-out", ft_ckpt_out, "control checkpoint path");

  // eval
  auto* eval = app.add_subcommand("eval", "composite scores of candidate runs against a base run");
  std::string eval_base, eval_out, eval_elo;
  std::vector<std::string> eval_candidates;
  eval->add_option("--base", eval_base, "base run directory")->required();
  eval->add_option("--candidate", eval_candidates, "candidate run directory (repeatable)")->required();
  eval->add_option("--out", eval_out, "output directory (default: the base run)");
  eval->add_option("--elo-log", eval_elo, "json-lines match log to rate");

  // convert-vp
  auto* convert = app.add_subcommand("convert-vp", "emit the fm schedule induced by a vp chain");
  add_common(convert);

  CLI11_PARSE(app, argc, argv);

  return run_guarded([&] {
    if (*eval) {
      std::vector<fs::path> candidates(eval_candidates.begin(), eval_candidates.end());
      cmd_eval(eval_base, candidates, eval_out.empty() ? fs::path(eval_base) : fs::path(eval_out),
               eval_elo.empty() ? fs::path() : fs::path(eval_elo));
      return;
    }
    RunConfig cfg = load_config_file(config_path);
    if (train_seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(train_seed);
    if (ft_seed >= 0) cfg.finetune.seed = static_cast<std::uint64_t>(ft_seed);
    const fs::path out = out_override.empty() ? fs::path(cfg.out_dir) : fs::path(out_override);
    if (*train) {
      cmd_train(cfg, out, train_ckpt_out);
    } else if (*sample) {
      SampleOverrides over;
      over.mode = sample_mode;
      over.steps = sample_steps;
      over.lambda = sample_lambda;
      over.seeds = sample_seeds;
      over.checkpoint_in = sample_ckpt_in;
      cmd_sample(cfg, out, over);
    } else if (*finetune) {
      FinetuneOverrides over;
      over.lambda = ft_lambda;
      over.steps = ft_steps;
      over.batch = ft_batch;
      over.subsample = ft_subsample;
      over.checkpoint_in = ft_ckpt_in;
      over.checkpoint_out = ft_ckpt_out;
      cmd_finetune(cfg, out, over);
    } else {
      cmd_convert_vp(cfg, out);
    }
  });
}
