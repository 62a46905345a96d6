#pragma once

#include "flowctl/checkpoint.hpp"
#include "flowctl/config.hpp"
#include "flowctl/io.hpp"

namespace flowctl {

// Batch command implementations behind the CLI. Each returns the process
// exit code:
//   0 ok, 2 config, 3 divergence, 4 missing artifact, 5 integrity,
//   6 evaluation mismatch.

namespace exit_code {
constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kDiverged = 3;
constexpr int kMissingArtifact = 4;
constexpr int kIntegrity = 5;
constexpr int kEvalMismatch = 6;
}  // namespace exit_code

template <class Fn>
int run_guarded(Fn&& fn) {
  try {
    fn();
    return exit_code::kOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_code::kConfig;
  } catch (const ScheduleError& e) {
    std::fprintf(stderr, "schedule error: %s\n", e.what());
    return exit_code::kConfig;
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return exit_code::kDiverged;
  } catch (const ArtifactError& e) {
    std::fprintf(stderr, "missing artifact: %s\n", e.what());
    return exit_code::kMissingArtifact;
  } catch (const IntegrityError& e) {
    std::fprintf(stderr, "integrity failure: %s\n", e.what());
    return exit_code::kIntegrity;
  } catch (const KeyMismatch& e) {
    std::fprintf(stderr, "evaluation mismatch: %s\n", e.what());
    return exit_code::kEvalMismatch;
  } catch (const DivisionByZero& e) {
    std::fprintf(stderr, "evaluation mismatch: %s\n", e.what());
    return exit_code::kEvalMismatch;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
  }
  return 1;
}

inline void write_manifest(const fs::path& dir, const RunConfig& cfg, const std::string& command) {
  nlohmann::json j{{"tool", "flowctl"},
                   {"version", FLOWCTL_VERSION},
                   {"command", command},
                   {"config_hash", cfg.hash()},
                   {"config", cfg.to_text()}};
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

inline RunConfig load_config_file(const fs::path& path) {
  std::ifstream probe(path);
  if (!probe) throw ConfigError("cannot open config file: " + path.string());
  return RunConfig::from_text(read_text_file(path));
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline void cmd_train(const RunConfig& cfg, const fs::path& out_dir, const fs::path& checkpoint_out = {}) {
  const auto sched = cfg.make_schedule();
  const auto target = cfg.make_target();
  Mlp field(cfg.field.dim, cfg.field.hidden, cfg.train.seed);
  const auto train_cfg = cfg.make_train();
  const auto curve = train_cfm(field, sched, target, train_cfg);
  const double tail = smoothed_tail(curve, train_cfg.smooth_window);
  if (!curve.empty() && tail > train_cfg.loss_threshold)
    throw TrainingDiverged("final smoothed loss " + std::to_string(tail) + " above threshold " +
                           std::to_string(train_cfg.loss_threshold));
  fs::create_directories(out_dir);
  save_checkpoint(checkpoint_out.empty() ? out_dir / "field.fctl" : checkpoint_out, field,
                  CheckpointKind::Field);
  write_csv_curve(out_dir / "train_curve.csv", curve, "cfm_loss");
  write_manifest(out_dir, cfg, "train");
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleOverrides {
  std::string mode;           // empty = from config
  int steps = -1;             // -1 = from config
  double lambda = -1.0;       // <0 = from config (sweep list)
  std::vector<std::uint64_t> seeds;  // empty = from config
  fs::path checkpoint_in;
};

namespace detail_run {

inline void sample_one_setting(const RunConfig& cfg, const Mlp& field,
                               const InterpolantSchedule& sched, const SamplerConfig& scfg,
                               double lambda, const std::vector<std::uint64_t>& seeds,
                               const fs::path& dir) {
  const bool use_cost = cfg.cost.kind != "none" && lambda != 0.0;
  std::shared_ptr<const MapHead> head;
  RunningCost cost = RunningCost::zero();
  if (cfg.cost.kind != "none") {
    head = std::make_shared<const MapHead>(cfg.make_head());
    cost = make_scene_cost(head, cfg.cost_kind(), cfg.time_weight(), sched, cfg.cost.gamma_reg);
  }
  fs::create_directories(dir);

  MetricReport report;
  report.config_hash = cfg.hash();
  std::ostringstream endpoints;
  endpoints << "seed";
  for (int j = 0; j < field.state_dim(); ++j) endpoints << ",x_" << j;
  endpoints << "\n";

  for (const std::uint64_t seed : seeds) {
    const Vec x0 = sample_base(seed, 0, field.state_dim());
    Trajectory traj;
    if (scfg.mode == SamplerMode::Ode) {
      traj = use_cost ? sample_controlled_ode(field, scfg, cost, lambda, x0)
                      : sample_ode(field, scfg, x0);
    } else {
      traj = use_cost ? sample_controlled_sde(field, sched, scfg, cost, lambda, x0, seed)
                      : sample_sde(field, sched, scfg, x0, seed);
    }
    const std::string tag = std::to_string(seed);
    write_trajectory_csv(dir / ("traj_" + tag + ".csv"), traj);
    write_replay(dir / ("traj_" + tag + ".replay"), traj);
    endpoints << seed;
    for (double v : traj.states.back()) endpoints << "," << fmt_double(v);
    endpoints << "\n";

    if (head) {
      const Scene scene = head->maps_from_state(traj.states.back());
      for (const auto& subject : scene)
        write_pgm16(dir / ("map_" + tag + "_s" + std::to_string(subject.subject_id) + ".pgm"),
                    subject.mean_map);
      const std::string scene_id = cfg.scene_id();
      report.add(scene_id, seed, "focus_score", 1.0 - focus_cost(scene));
      report.add(scene_id, seed, "separation_score", 1.0 - cosine_separation_cost(scene));
      double h = 0.0;
      for (const auto& subject : scene) {
        double hs = 0.0;
        for (double v : subject.mean_map.weights)
          if (v > 0.0) hs -= v * std::log(v);
        h += hs / (std::log(static_cast<double>(subject.mean_map.grid())) * scene.size());
      }
      report.add(scene_id, seed, "entropy_score", h);
    }
  }
  write_text_file(dir / "endpoints.csv", endpoints.str());
  if (head) write_report(dir / "metrics.json", report);
  write_manifest(dir, cfg, "sample");
}

}  // namespace detail_run

inline void cmd_sample(RunConfig cfg, const fs::path& out_dir, const SampleOverrides& over = {}) {
  if (!over.mode.empty()) cfg.sampler.mode = over.mode;
  if (over.steps > 0) cfg.sampler.steps = over.steps;
  if (over.lambda >= 0.0) cfg.cost.lambdas = {over.lambda};
  const auto seeds = over.seeds.empty() ? cfg.seeds : over.seeds;

  const auto sched = cfg.make_schedule();
  const auto scfg = cfg.make_sampler(sched);
  const fs::path ckpt = over.checkpoint_in.empty() ? out_dir / "field.fctl" : over.checkpoint_in;
  const Mlp field = load_checkpoint(ckpt, CheckpointKind::Field);
  if (field.state_dim() != cfg.field.dim)
    throw ConfigError("checkpoint dimension does not match config field.dim");

  if (cfg.cost.lambdas.size() <= 1) {
    const double lambda = cfg.cost.lambdas.empty() ? 0.0 : cfg.cost.lambdas.front();
    detail_run::sample_one_setting(cfg, field, sched, scfg, lambda, seeds, out_dir);
    return;
  }
  // sweep: one child run per lambda, executed by the worker pool
  const auto& lambdas = cfg.cost.lambdas;
  std::vector<std::exception_ptr> errors(lambdas.size());
  for_chunks(lambdas.size(), 1, [&](std::size_t i, std::size_t, std::size_t) {
    try {
      std::ostringstream name;
      name << "lam_" << lambdas[i];
      detail_run::sample_one_setting(cfg, field, sched, scfg, lambdas[i], seeds, out_dir / name.str());
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  write_manifest(out_dir, cfg, "sample-sweep");
}

// ---------------------------------------------------------------------------
// finetune
// ---------------------------------------------------------------------------

struct FinetuneOverrides {
  double lambda = -1.0;
  int steps = -1;
  int batch = -1;
  int subsample = -1;
  fs::path checkpoint_in;
  fs::path checkpoint_out;
};

inline void cmd_finetune(RunConfig cfg, const fs::path& out_dir, const FinetuneOverrides& over = {}) {
  if (over.lambda >= 0.0) cfg.finetune.lambda = over.lambda;
  if (over.steps >= 0) cfg.finetune.steps = over.steps;
  if (over.batch > 0) cfg.finetune.batch = over.batch;
  if (over.subsample > 0) cfg.finetune.subsample = over.subsample;

  const auto sched = cfg.make_schedule();
  const fs::path ckpt = over.checkpoint_in.empty() ? out_dir / "field.fctl" : over.checkpoint_in;
  const Mlp field = load_checkpoint(ckpt, CheckpointKind::Field);
  if (field.state_dim() != cfg.field.dim)
    throw ConfigError("checkpoint dimension does not match config field.dim");
  const std::uint64_t base_sum = checksum(field.params());

  auto head = std::make_shared<const MapHead>(cfg.make_head());
  // fine-tuning regresses against the plain scaled cost; sigma factors enter
  // through the control parameterization itself
  const auto cost = make_scene_cost(head, cfg.cost_kind(), TimeWeight::None, sched, cfg.cost.gamma_reg);
  const auto am = cfg.make_finetune();
  fs::create_directories(out_dir);
  const fs::path control_path =
      over.checkpoint_out.empty() ? out_dir / "control.fctl" : over.checkpoint_out;
  const auto on_checkpoint = [&](int iter, const Mlp& control) {
    save_checkpoint(out_dir / ("control_iter" + std::to_string(iter) + ".fctl"), control,
                    CheckpointKind::Control);
  };
  auto result = finetune_adjoint_matching(field, sched, cost, am, cfg.finetune.seed, on_checkpoint);
  if (checksum(field.params()) != base_sum)
    throw IntegrityError("base field parameters changed during fine-tuning");

  save_checkpoint(control_path, result.control, CheckpointKind::Control);
  write_csv_curve(out_dir / "finetune_curve.csv", result.curve, "am_loss");
  write_manifest(out_dir, cfg, "finetune");
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

inline void cmd_eval(const fs::path& base_run, const std::vector<fs::path>& candidate_runs,
                     const fs::path& out_dir, const fs::path& elo_log = {}) {
  const MetricReport base = read_report(base_run / "metrics.json");
  nlohmann::json table = nlohmann::json::array();
  std::vector<std::pair<double, nlohmann::json>> rows;
  for (const auto& run : candidate_runs) {
    const MetricReport cand = read_report(run / "metrics.json");
    const auto res = composite_score(cand, base);
    rows.emplace_back(res.score, nlohmann::json{{"run", run.string()},
                                                {"composite", res.score},
                                                {"skipped_keys", res.skipped},
                                                {"config_hash", cand.config_hash}});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::ostringstream csv;
  csv << "run,composite,skipped_keys\n";
  for (const auto& [score, row] : rows) {
    table.push_back(row);
    csv << row.at("run").get<std::string>() << "," << fmt_double(score) << ","
        << row.at("skipped_keys").get<int>() << "\n";
  }
  nlohmann::json out{{"base", base_run.string()}, {"candidates", table}};

  if (!elo_log.empty()) {
    const auto log = read_match_log(elo_log);
    EloTable elo;
    for (const auto& m : log) {
      if (!elo.has(m.a)) elo.register_candidate(m.a);
      if (!elo.has(m.b)) elo.register_candidate(m.b);
      elo.update(m.a, m.b, m.outcome);
    }
    nlohmann::json ratings = nlohmann::json::object();
    for (const auto& [name, rating] : elo.ratings())
      ratings[name] = {{"elo", rating}, {"win_rate", elo.win_rate(name)}};
    out["elo"] = ratings;
  }

  fs::create_directories(out_dir);
  write_text_file(out_dir / "eval.json", out.dump(2) + "\n");
  write_text_file(out_dir / "eval.csv", csv.str());
  std::printf("%s", csv.str().c_str());
}

// ---------------------------------------------------------------------------
// convert-vp
// ---------------------------------------------------------------------------

inline void cmd_convert_vp(const RunConfig& cfg, const fs::path& out_dir) {
  if (!cfg.schedule.vp) throw ConfigError("convert-vp needs a vp schedule in the config");
  auto table = VpRateTable::linear(cfg.schedule.steps, cfg.schedule.beta_min, cfg.schedule.beta_max);
  const auto sched = vp_to_fm_schedule(table);  // validates the boundary
  fs::create_directories(out_dir);
  write_schedule_table(out_dir / "schedule_vp.json", table);
  // a decimal sample of the induced schedule for inspection
  std::ostringstream csv;
  csv << "t,alpha,beta,sigma_mem\n";
  for (int i = 1; i < 100; ++i) {
    const double t = i / 100.0;
    csv << fmt_double(t) << "," << fmt_double(sched.alpha(t)) << "," << fmt_double(sched.beta(t))
        << "," << fmt_double(sigma_mem(sched, t)) << "\n";
  }
  write_text_file(out_dir / "schedule_fm.csv", csv.str());
  write_manifest(out_dir, cfg, "convert-vp");
}

}  // namespace flowctl
