#pragma once

// Experiment orchestration. A cell is one (algorithm, kill setting, seed)
// run; the plan is the grid of cells. Output directory layout:
//
//   manifest.json                 config hash, version, per-cell status
//   transcripts/<cell>.jsonl      one line per episode
//   checkpoints/<cell>.ckpt       final learner parameters
//   diagnostics/<cell>.csv        per-update (PPO) or per-episode (AC) losses
//   failures/<cell>.txt           diagnostic for failed cells
//   summary.csv, table1.csv, curves.csv, significance.txt   (report)
//
// Every file a cell writes is named after the cell, so cells never touch
// each other's outputs.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "limbrl/actor_critic.hpp"
#include "limbrl/brownian.hpp"
#include "limbrl/checkpoint.hpp"
#include "limbrl/config.hpp"
#include "limbrl/environment.hpp"
#include "limbrl/evaluation.hpp"
#include "limbrl/ppo.hpp"
#include "limbrl/transcript.hpp"

namespace limbrl {

inline constexpr const char* kVersionTag = "limbrl-1.0.0";

namespace fs = std::filesystem;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Cell seed = splitmix64(FNV-1a("<base_seed>:<ALGO>:<SETTING>:<rep>")).
// This derivation is part of the output format; changing it changes every
// transcript.
inline std::uint64_t derive_cell_seed(std::uint64_t base_seed, Algorithm alg, KillSetting setting,
                                      std::uint64_t repetition) {
  const std::string key = std::to_string(base_seed) + ":" + to_string(alg) + ":" + to_string(setting) + ":" +
                          std::to_string(repetition);
  return splitmix64(fnv1a(key));
}

struct CellSpec {
  Algorithm algorithm = Algorithm::PPO;
  KillSetting setting = KillSetting::Kill0;
  std::uint64_t seed = 0;  // plan-level seed: base_seed + repetition
  std::uint64_t base_seed = 0;

  std::uint64_t repetition() const { return seed - base_seed; }
  std::uint64_t rng_seed() const { return derive_cell_seed(base_seed, algorithm, setting, repetition()); }
  std::string name() const {
    return std::string(to_string(algorithm)) + "_" + to_string(setting) + "_" + std::to_string(seed);
  }
  bool operator==(const CellSpec&) const = default;
};

// "ALGO:SETTING:SEED"
inline CellSpec parse_cell(const std::string& text, std::uint64_t base_seed) {
  const auto a = text.find(':');
  const auto b = text.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos)
    throw ConfigError("cell must be ALGO:SETTING:SEED, got '" + text + "'");
  CellSpec c;
  c.algorithm = parse_algorithm(text.substr(0, a));
  c.setting = parse_kill_setting(text.substr(a + 1, b - a - 1));
  try {
    std::size_t used = 0;
    const std::string s = text.substr(b + 1);
    c.seed = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    throw ConfigError("cell seed must be an unsigned integer in '" + text + "'");
  }
  c.base_seed = base_seed;
  return c;
}

struct ExperimentPlan {
  std::vector<CellSpec> cells;
};

inline ExperimentPlan build_plan(const PlanConfig& plan, bool learners = true, bool baselines = true) {
  ExperimentPlan p;
  auto add = [&](Algorithm alg, int reps) {
    for (auto s : plan.settings)
      for (int r = 0; r < reps; ++r)
        p.cells.push_back({alg, s, plan.base_seed + static_cast<std::uint64_t>(r), plan.base_seed});
  };
  if (learners)
    for (auto alg : plan.learners) add(alg, plan.repetitions);
  if (baselines)
    for (auto alg : plan.baselines) add(alg, plan.baseline_seeds);
  return p;
}

enum class CellStatus { Pending, Done, Failed };

inline const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Pending: return "pending";
    case CellStatus::Done: return "done";
    case CellStatus::Failed: return "failed";
  }
  return "?";
}

struct CellOutcome {
  CellStatus status = CellStatus::Pending;
  double wall_seconds = 0.0;
  std::string transcript_hash;
  int episodes = 0;
  long steps = 0;
  std::string error;
};

struct RunManifest {
  std::string config_hash;
  std::string version = kVersionTag;
  std::map<std::string, CellOutcome> cells;

  int count(CellStatus s) const {
    int n = 0;
    for (const auto& [name, c] : cells) n += c.status == s ? 1 : 0;
    return n;
  }
};

inline nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["config_hash"] = m.config_hash;
  auto cells = nlohmann::ordered_json::object();
  for (const auto& [name, c] : m.cells) {
    nlohmann::ordered_json e;
    e["status"] = to_string(c.status);
    e["wall_seconds"] = c.wall_seconds;
    e["episodes"] = c.episodes;
    e["steps"] = c.steps;
    e["transcript_hash"] = c.transcript_hash;
    if (!c.error.empty()) e["error"] = c.error;
    cells[name] = e;
  }
  j["cells"] = cells;
  return j;
}

inline RunManifest load_manifest(const fs::path& out_dir) {
  RunManifest m;
  std::ifstream in(out_dir / "manifest.json");
  if (!in) return m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.config_hash = j.value("config_hash", "");
    m.version = j.value("version", "");
    for (const auto& [name, e] : j.at("cells").items()) {
      CellOutcome c;
      const std::string st = e.value("status", "pending");
      c.status = st == "done" ? CellStatus::Done : st == "failed" ? CellStatus::Failed : CellStatus::Pending;
      c.wall_seconds = e.value("wall_seconds", 0.0);
      c.episodes = e.value("episodes", 0);
      c.steps = e.value("steps", 0L);
      c.transcript_hash = e.value("transcript_hash", "");
      c.error = e.value("error", "");
      m.cells[name] = c;
    }
  } catch (const nlohmann::json::exception&) {
    return RunManifest{};  // unreadable manifest: everything is re-run
  }
  return m;
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << text;
  }
  fs::rename(tmp, path);
}

inline void save_manifest(const fs::path& out_dir, const RunManifest& m) {
  write_text_atomic(out_dir / "manifest.json", to_json(m).dump(2) + "\n");
}

inline fs::path transcript_path(const fs::path& out_dir, const CellSpec& c) {
  return out_dir / "transcripts" / (c.name() + ".jsonl");
}

namespace detail {

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline Checkpoint ppo_checkpoint(const PpoAgent& a) {
  Checkpoint c;
  c.networks.emplace("actor", a.actor());
  c.networks.emplace("critic", a.critic());
  c.vectors.emplace("log_std", a.log_std());
  return c;
}

inline Checkpoint ac_checkpoint(const AcAgent& a) {
  Checkpoint c;
  c.networks.emplace("actor", a.actor());
  c.networks.emplace("critic", a.critic());
  return c;
}

}  // namespace detail

// Runs one cell and writes its transcript, checkpoint and diagnostics.
// Deterministic in (cell, config). Training divergence marks the cell failed.
inline CellOutcome run_cell(const CellSpec& cell, const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = cell.rng_seed();
  const std::uint64_t env_seed = splitmix64(seed ^ 0x656e76ULL);
  const std::uint64_t agent_seed = splitmix64(seed ^ 0x6167656e74ULL);

  CellOutcome out;
  std::ostringstream transcript, diag;
  std::optional<Checkpoint> ckpt;
  auto log_episode = [&](const EpisodeLog& log) {
    transcript << transcript_line(cell.algorithm, cell.setting, cell.seed, log) << "\n";
    ++out.episodes;
    out.steps += log.length;
  };

  try {
    switch (cell.algorithm) {
      case Algorithm::PPO: {
        EnvConfig ec = cfg.env_config(ActionSpace::Continuous, cell.setting, env_seed);
        ec.max_steps = cfg.env.continuous_max_steps;
        Environment env(cfg.model, cfg.rig, ec);
        PpoAgent agent(cfg.ppo, agent_seed);
        diag << "update,episodes,mean_length,policy_loss,value_loss,entropy,clip_fraction,approx_kl\n";
        int update = 0;
        while (out.steps < cfg.ppo.total_steps) {
          auto buf = ppo_collect(env, agent, cfg.ppo.episodes_per_update, cfg.ppo.total_steps - out.steps,
                                 out.episodes);
          double len = 0.0;
          for (const auto& e : buf.episodes) {
            log_episode(e);
            len += e.length;
          }
          const auto est = compute_gae(buf.steps, cfg.ppo.gamma, cfg.ppo.gae_lambda);
          const auto d = ppo_update(agent, buf, est);
          diag << update++ << "," << buf.episodes.size() << "," << detail::fmt(len / buf.episodes.size()) << ","
               << detail::fmt(d.policy_loss) << "," << detail::fmt(d.value_loss) << "," << detail::fmt(d.entropy)
               << "," << detail::fmt(d.clip_fraction) << "," << detail::fmt(d.approx_kl) << "\n";
        }
        ckpt = detail::ppo_checkpoint(agent);
        break;
      }
      case Algorithm::AC: {
        Environment env(cfg.model, cfg.rig, cfg.env_config(ActionSpace::Discrete, cell.setting, env_seed));
        AcAgent agent(cfg.ac, agent_seed);
        diag << "episode,length,actor_loss,critic_loss\n";
        for (int e = 0; e < cfg.ac.episodes; ++e) {
          const auto r = ac_episode(env, agent, e);
          log_episode(r.log);
          diag << e << "," << r.log.length << "," << detail::fmt(r.actor_loss) << "," << detail::fmt(r.critic_loss)
               << "\n";
        }
        ckpt = detail::ac_checkpoint(agent);
        break;
      }
      case Algorithm::BMMS:
      case Algorithm::BMSS: {
        const bool multi = cell.algorithm == Algorithm::BMMS;
        Environment env(cfg.model, cfg.rig,
                        cfg.env_config(multi ? ActionSpace::Continuous : ActionSpace::Discrete, cell.setting,
                                       env_seed));
        std::mt19937_64 rng(agent_seed);
        for (int e = 0; e < cfg.plan.baseline_episodes; ++e)
          log_episode(brownian_episode(env, multi ? BrownianMode::BMMS : BrownianMode::BMSS, rng, e));
        break;
      }
    }
  } catch (const DivergenceError& e) {
    out.status = CellStatus::Failed;
    out.error = e.what();
    write_text_atomic(out_dir / "failures" / (cell.name() + ".txt"),
                      cell.name() + ": " + e.what() + "\nepisodes completed: " + std::to_string(out.episodes) +
                          "\nenv steps: " + std::to_string(out.steps) + "\n");
    write_text_atomic(out_dir / "diagnostics" / (cell.name() + ".csv"), diag.str());
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  const fs::path tpath = transcript_path(out_dir, cell);
  write_text_atomic(tpath, transcript.str());
  if (ckpt) write_text_atomic(out_dir / "checkpoints" / (cell.name() + ".ckpt"), serialize_checkpoint(*ckpt));
  if (!diag.str().empty()) write_text_atomic(out_dir / "diagnostics" / (cell.name() + ".csv"), diag.str());
  std::error_code ec;
  fs::remove(out_dir / "failures" / (cell.name() + ".txt"), ec);

  out.status = CellStatus::Done;
  out.transcript_hash = file_hash(tpath.string());
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// A cell can be skipped when the manifest says done and its transcript still
// hashes to the recorded value.
inline bool cell_is_complete(const RunManifest& m, const CellSpec& cell, const fs::path& out_dir) {
  const auto it = m.cells.find(cell.name());
  if (it == m.cells.end() || it->second.status != CellStatus::Done) return false;
  const fs::path p = transcript_path(out_dir, cell);
  return fs::exists(p) && file_hash(p.string()) == it->second.transcript_hash;
}

inline int default_parallelism() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw == 0 ? 1u : hw, 1u, 10u));
}

struct RunStats {
  int executed = 0;
  int skipped = 0;
  int failed = 0;
};

// Executes every cell not already complete. Cells run on `parallel` worker
// threads; only the coordinating section below touches the manifest.
inline RunManifest run_plan(const ExperimentPlan& plan, const ExperimentConfig& cfg, const fs::path& out_dir,
                            int parallel = 0, RunStats* stats = nullptr) {
  fs::create_directories(out_dir);
  RunManifest manifest = load_manifest(out_dir);
  const std::string config_hash = hex64(fnv1a(cfg.source_text));
  if (manifest.config_hash != config_hash) {
    manifest.cells.clear();  // outputs from a different config are stale
    manifest.config_hash = config_hash;
  }
  manifest.version = kVersionTag;

  std::vector<CellSpec> todo;
  RunStats local;
  for (const auto& cell : plan.cells) {
    if (cell_is_complete(manifest, cell, out_dir)) {
      ++local.skipped;
    } else {
      manifest.cells[cell.name()] = CellOutcome{};
      todo.push_back(cell);
    }
  }
  save_manifest(out_dir, manifest);

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      CellOutcome r = run_cell(todo[i], cfg, out_dir);
      std::lock_guard lock(mu);
      manifest.cells[todo[i].name()] = r;
      ++local.executed;
      if (r.status == CellStatus::Failed) ++local.failed;
      save_manifest(out_dir, manifest);
    }
  };
  const int threads = std::max(1, std::min<int>(parallel > 0 ? parallel : default_parallelism(),
                                               static_cast<int>(std::max<std::size_t>(todo.size(), 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (stats) *stats = local;
  return manifest;
}

// ---------------------------------------------------------------------------
// Reporting

struct Comparison {
  KillSetting setting = KillSetting::Kill0;
  Algorithm learner = Algorithm::PPO;
  Algorithm baseline = Algorithm::BMMS;
  double learner_mean = 0.0;
  double baseline_mean = 0.0;
  TTestResult test;
  bool holm_reject = false;
  bool significant = false;  // Holm-rejected and learner episodes shorter
};

struct Report {
  std::map<CellKey, CellSummary> summaries;
  std::vector<Comparison> comparisons;
  std::map<CellKey, std::vector<CurvePoint>> curves;
  double alpha = 0.01;
};

inline int final_window(const PlanConfig& plan, Algorithm a) {
  switch (a) {
    case Algorithm::PPO: return plan.ppo_window;
    case Algorithm::AC: return plan.ac_window;
    default: return std::numeric_limits<int>::max();  // baselines: every episode
  }
}

inline std::vector<CellKey> required_cells(const PlanConfig& plan) {
  std::vector<CellKey> keys;
  for (auto s : plan.settings) {
    for (auto a : plan.learners) keys.push_back({a, s});
    for (auto a : plan.baselines) keys.push_back({a, s});
  }
  return keys;
}

inline int curve_bin(const PlanConfig& plan, const PpoConfig& ppo, Algorithm a) {
  (void)plan;
  return a == Algorithm::PPO ? ppo.episodes_per_update : 10;
}

// Learners are compared with their baseline per kill setting: PPO with BMMS,
// AC with BMSS. Samples are episode lengths: every final-window learner
// episode pooled across seeds against every baseline episode. Holm runs over
// all comparisons together.
inline Report build_report(const std::vector<EpisodeRecord>& records, const PlanConfig& plan,
                           const PpoConfig& ppo = PpoConfig{}) {
  Report rep;
  rep.alpha = plan.alpha;
  rep.summaries = summarize(records, [&](Algorithm a) { return final_window(plan, a); }, required_cells(plan));

  for (auto s : plan.settings) {
    for (auto [learner, baseline] : {std::pair{Algorithm::PPO, Algorithm::BMMS}, std::pair{Algorithm::AC, Algorithm::BMSS}}) {
      const auto li = rep.summaries.find({learner, s});
      const auto bi = rep.summaries.find({baseline, s});
      if (li == rep.summaries.end() || bi == rep.summaries.end()) continue;
      Comparison c;
      c.setting = s;
      c.learner = learner;
      c.baseline = baseline;
      c.learner_mean = li->second.episode_mean;
      c.baseline_mean = bi->second.episode_mean;
      c.test = t_test(li->second.episode_lengths, bi->second.episode_lengths, plan.t_test);
      rep.comparisons.push_back(c);
    }
  }
  std::vector<double> ps;
  for (const auto& c : rep.comparisons) ps.push_back(c.test.p);
  const auto reject = holm_bonferroni(ps, plan.alpha);
  for (std::size_t i = 0; i < rep.comparisons.size(); ++i) {
    auto& c = rep.comparisons[i];
    c.holm_reject = reject[i];
    c.significant = reject[i] && c.learner_mean < c.baseline_mean;
  }

  std::map<CellKey, std::vector<EpisodeRecord>> by_cell;
  for (const auto& r : records) by_cell[{r.algorithm, r.setting}].push_back(r);
  for (const auto& [key, recs] : by_cell) rep.curves[key] = learning_curve(recs, curve_bin(plan, ppo, key.algorithm));
  return rep;
}

inline std::string summary_csv(const Report& rep) {
  std::ostringstream out;
  out << "setting,algorithm,runs,mean,sd_across_runs,episodes,episode_mean,episode_sd\n";
  for (const auto& [key, s] : rep.summaries) {
    out << to_string(key.setting) << "," << to_string(key.algorithm) << "," << s.n << "," << detail::fmt(s.mean, 4)
        << "," << (std::isnan(s.sd) ? std::string("NA") : detail::fmt(s.sd, 4)) << "," << s.episode_n << ","
        << detail::fmt(s.episode_mean, 4) << ","
        << (std::isnan(s.episode_sd) ? std::string("NA") : detail::fmt(s.episode_sd, 4)) << "\n";
  }
  return out.str();
}

// Wide layout: one row per kill setting, one "mean +- SD" column per
// algorithm. SD is across runs when there are several runs, else across
// episodes (marked with '*').
inline std::string table1_csv(const Report& rep) {
  std::vector<KillSetting> settings;
  for (const auto& [key, s] : rep.summaries)
    if (std::find(settings.begin(), settings.end(), key.setting) == settings.end()) settings.push_back(key.setting);
  std::ostringstream out;
  out << "setting,BMSS,BMMS,PPO,AC\n";
  for (auto st : settings) {
    out << to_string(st);
    for (auto a : {Algorithm::BMSS, Algorithm::BMMS, Algorithm::PPO, Algorithm::AC}) {
      out << ",";
      const auto it = rep.summaries.find({a, st});
      if (it == rep.summaries.end()) continue;
      const auto& s = it->second;
      const bool runs = s.n > 1;
      out << detail::fmt(s.mean, 2) << " +- " << detail::fmt(runs ? s.sd : s.episode_sd, 2) << (runs ? "" : "*");
    }
    out << "\n";
  }
  return out.str();
}

inline std::string curves_csv(const Report& rep) {
  std::ostringstream out;
  out << "algorithm,setting,bin,mean,se,runs\n";
  for (const auto& [key, curve] : rep.curves)
    for (const auto& p : curve)
      out << to_string(key.algorithm) << "," << to_string(key.setting) << "," << p.bin << ","
          << detail::fmt(p.mean, 4) << "," << detail::fmt(p.se, 4) << "," << p.n << "\n";
  return out.str();
}

inline std::string significance_text(const Report& rep) {
  std::ostringstream out;
  out << "Learner vs baseline episode lengths (Student's t, Holm-Bonferroni over " << rep.comparisons.size()
      << " comparisons, alpha = " << rep.alpha << ")\n";
  for (const auto& c : rep.comparisons) {
    char p[32];
    std::snprintf(p, sizeof p, "%.3e", c.test.p);
    out << to_string(c.setting) << " " << to_string(c.learner) << " vs " << to_string(c.baseline) << ": "
        << detail::fmt(c.learner_mean, 3) << " vs " << detail::fmt(c.baseline_mean, 3)
        << "  t = " << (std::isinf(c.test.t) ? (c.test.t > 0 ? "inf" : "-inf") : detail::fmt(c.test.t, 3))
        << "  df = " << detail::fmt(c.test.df, 1) << "  p = " << p
        << (c.test.degenerate_variance ? " [degenerate variance]" : "")
        << "  -> " << (c.significant ? "significant" : "not significant") << "\n";
  }
  out << "\nNotes: safety-capped episodes enter at the cap length and count as not detected.\n"
         "Learner samples are final-window episodes pooled over seeds; baseline samples are all episodes.\n";
  return out.str();
}

inline std::vector<EpisodeRecord> load_records(const fs::path& out_dir) {
  std::vector<EpisodeRecord> records;
  const fs::path dir = out_dir / "transcripts";
  if (!fs::exists(dir)) return records;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto recs = read_transcript(f.string(), f.stem().string());
    records.insert(records.end(), recs.begin(), recs.end());
  }
  return records;
}

// Reads every transcript under `out_dir`, writes the report files and
// returns the report. Missing cells raise MissingData naming every one.
inline Report report(const fs::path& out_dir, const ExperimentConfig& cfg) {
  const auto records = load_records(out_dir);
  std::vector<std::string> missing;
  {
    std::map<CellKey, bool> present;
    for (const auto& r : records) present[{r.algorithm, r.setting}] = true;
    for (const auto& k : required_cells(cfg.plan))
      if (!present.count(k)) missing.push_back(to_string(k));
  }
  if (!missing.empty()) {
    std::string msg = "missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw MissingData(msg);
  }
  Report rep = build_report(records, cfg.plan, cfg.ppo);
  write_text_atomic(out_dir / "summary.csv", summary_csv(rep));
  write_text_atomic(out_dir / "table1.csv", table1_csv(rep));
  write_text_atomic(out_dir / "curves.csv", curves_csv(rep));
  write_text_atomic(out_dir / "significance.txt", significance_text(rep));
  return rep;
}

}  // namespace limbrl
