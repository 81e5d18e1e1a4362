// limbrl: run the camera-kill experiment grid, build reports, and run the
// invariant checks.
//
//   limbrl run      [--cell ALGO:SETTING:SEED] [--config PATH] [--out DIR] [--base-seed N] [--parallel N]
//   limbrl report   [--config PATH] [--out DIR]
//   limbrl check    [--config PATH] [--seed N]
//   limbrl baseline [--config PATH] [--out DIR] [--baseline-seeds N] [--parallel N]
//
// Exit codes: 0 success, 1 a cell failed or a check failed, 2 bad config or usage.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "limbrl/oracles.hpp"
#include "limbrl/runner.hpp"

#ifndef LIMBRL_DEFAULT_CONFIG
#define LIMBRL_DEFAULT_CONFIG "config/default.ini"
#endif

namespace {

using namespace limbrl;

struct Options {
  std::string config = LIMBRL_DEFAULT_CONFIG;
  std::string out = "results";
  std::optional<std::uint64_t> base_seed;
  std::optional<int> parallel;
  std::optional<int> baseline_seeds;
  std::string cell;
  std::uint64_t check_seed = 7;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.base_seed) cfg.plan.base_seed = *o.base_seed;
  if (o.parallel) cfg.plan.parallel = *o.parallel;
  if (o.baseline_seeds) {
    if (*o.baseline_seeds < 1) throw ConfigError("--baseline-seeds must be >= 1");
    cfg.plan.baseline_seeds = *o.baseline_seeds;
  }
  return cfg;
}

int print_run(const RunManifest& m, const RunStats& s) {
  std::printf("executed %d, skipped %d, failed %d\n", s.executed, s.skipped, s.failed);
  for (const auto& [name, c] : m.cells)
    if (c.status == CellStatus::Failed) std::printf("FAILED %s: %s\n", name.c_str(), c.error.c_str());
  return m.count(CellStatus::Failed) > 0 ? 1 : 0;
}

int cmd_run(const Options& o) {
  const ExperimentConfig cfg = load(o);
  ExperimentPlan plan;
  if (!o.cell.empty())
    plan.cells.push_back(parse_cell(o.cell, cfg.plan.base_seed));
  else
    plan = build_plan(cfg.plan);
  RunStats stats;
  const auto m = run_plan(plan, cfg, o.out, cfg.plan.parallel, &stats);
  return print_run(m, stats);
}

int cmd_baseline(const Options& o) {
  const ExperimentConfig cfg = load(o);
  RunStats stats;
  const auto m = run_plan(build_plan(cfg.plan, false, true), cfg, o.out, cfg.plan.parallel, &stats);
  return print_run(m, stats);
}

int cmd_report(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const Report rep = report(o.out, cfg);
  std::cout << table1_csv(rep) << "\n" << significance_text(rep);
  return 0;
}

int cmd_check(const Options& o) {
  const ExperimentConfig cfg = load(o);
  bool ok = true;
  auto line = [&](bool pass, const std::string& what) {
    std::printf("%s  %s\n", pass ? "PASS" : "FAIL", what.c_str());
    ok = ok && pass;
  };
  char buf[256];

  const auto g = oracle::gradient_sweep(100, o.check_seed);
  std::snprintf(buf, sizeof buf, "gradient check: %d networks, worst relative error %.2e", g.networks, g.worst);
  line(g.worst < 1e-4, buf);

  const LimbModel& model = cfg.model;
  std::mt19937_64 rng(o.check_seed);
  double worst_fk = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const JointState q = sample_joints(model, rng);
    worst_fk = std::max(worst_fk, (tip_position(q, model) - oracle::tip_position(q.angles(), model)).norm());
  }
  std::snprintf(buf, sizeof buf, "kinematics oracle: 1000 joint states, worst tip error %.2e m", worst_fk);
  line(worst_fk < 1e-6, buf);

  const auto v = oracle::visibility_sweep(10000, o.check_seed, cfg.rig.cameras[0].intrinsics);
  std::snprintf(buf, sizeof buf, "visibility oracle: %d/%d agree, worst disagreement %.3f px from border", v.agree,
                v.cases, v.worst_disagreement_border_px);
  line(v.agree >= 0.999 * v.cases && v.worst_disagreement_border_px <= 0.5, buf);

  double worst_p = 0.0;
  for (int df = 2; df <= 60; ++df)
    for (double t : {0.1, 0.5, 1.0, 2.0, 3.0, 5.0})
      worst_p = std::max(worst_p, std::abs(student_t_two_sided_p(t, df) - oracle::t_two_sided_p(t, df)));
  std::snprintf(buf, sizeof buf, "t distribution oracle: worst p difference %.2e", worst_p);
  line(worst_p < 1e-6, buf);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-kill reinforcement learning experiments for a soft robotic limb"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Config file")->capture_default_str();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--base-seed", o.base_seed, "Override plan base seed");
    sub->add_option("--parallel", o.parallel, "Worker threads (0 = hardware, capped at 10)");
    sub->add_option("--baseline-seeds", o.baseline_seeds, "Baseline seeds per kill setting");
  };
  auto* run = app.add_subcommand("run", "Run the full plan or a single cell");
  add_common(run);
  run->add_option("--cell", o.cell, "Single cell as ALGO:SETTING:SEED");
  auto* rep = app.add_subcommand("report", "Summaries, Table 1, learning curves and significance");
  add_common(rep);
  auto* chk = app.add_subcommand("check", "Gradient, kinematics, visibility and statistics oracles");
  chk->add_option("--config", o.config, "Config file")->capture_default_str();
  chk->add_option("--seed", o.check_seed, "RNG seed for the random cases");
  auto* base = app.add_subcommand("baseline", "Run only the Brownian baseline cells");
  add_common(base);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(o);
    if (*rep) return cmd_report(o);
    if (*chk) return cmd_check(o);
    if (*base) return cmd_baseline(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const MissingData& e) {
    std::fprintf(stderr, "missing data: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
