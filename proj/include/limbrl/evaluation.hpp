#pragma once

// Episode-level statistics: two-level summaries (per-run final window, then
// across runs), learning curves with standard errors, Student's t-test and
// Holm-Bonferroni step-down correction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "limbrl/error.hpp"
#include "limbrl/vision.hpp"

namespace limbrl {

enum class Algorithm { PPO, AC, BMMS, BMSS };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::PPO: return "PPO";
    case Algorithm::AC: return "AC";
    case Algorithm::BMMS: return "BMMS";
    case Algorithm::BMSS: return "BMSS";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "PPO") return Algorithm::PPO;
  if (s == "AC") return Algorithm::AC;
  if (s == "BMMS") return Algorithm::BMMS;
  if (s == "BMSS") return Algorithm::BMSS;
  throw ConfigError("unknown algorithm '" + s + "'");
}

inline bool is_learner(Algorithm a) { return a == Algorithm::PPO || a == Algorithm::AC; }

struct EpisodeRecord {
  std::string run_id;
  Algorithm algorithm = Algorithm::PPO;
  KillSetting setting = KillSetting::Kill0;
  std::uint64_t seed = 0;
  int episode = 0;
  int length = 1;
  bool detected = false;
};

struct CellKey {
  Algorithm algorithm;
  KillSetting setting;
  auto operator<=>(const CellKey&) const = default;
};

inline std::string to_string(const CellKey& k) {
  return std::string(to_string(k.algorithm)) + ":" + to_string(k.setting);
}

struct CellSummary {
  double mean = 0.0;  // mean over runs of each run's final-window mean
  double sd = 0.0;    // sample SD of the run means (0 for a single run)
  int n = 0;          // number of runs
  double episode_mean = 0.0;  // pooled over every windowed episode
  double episode_sd = 0.0;
  int episode_n = 0;
  std::vector<double> run_means;
  std::vector<double> episode_lengths;
};

inline double mean_of(const std::vector<double>& x) {
  return x.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Returns the final-window size for an algorithm.
using WindowFn = std::function<int(Algorithm)>;

// Groups records by (algorithm, setting) and by run, keeps each run's last
// `window(algorithm)` episodes, then aggregates across runs. Record order
// does not matter.
inline std::map<CellKey, CellSummary> summarize(const std::vector<EpisodeRecord>& records, const WindowFn& window,
                                                const std::vector<CellKey>& required = {}) {
  std::map<CellKey, std::map<std::pair<std::string, std::uint64_t>, std::vector<std::pair<int, int>>>> runs;
  for (const auto& r : records) runs[{r.algorithm, r.setting}][{r.run_id, r.seed}].push_back({r.episode, r.length});

  for (const auto& k : required)
    if (!runs.count(k)) throw MissingData("no episode records for cell " + to_string(k));

  std::map<CellKey, CellSummary> out;
  for (auto& [key, by_run] : runs) {
    CellSummary s;
    const int w = window(key.algorithm);
    for (auto& [run, episodes] : by_run) {
      std::sort(episodes.begin(), episodes.end());
      const std::size_t take = std::min<std::size_t>(episodes.size(), static_cast<std::size_t>(std::max(w, 1)));
      std::vector<double> tail;
      for (std::size_t i = episodes.size() - take; i < episodes.size(); ++i) tail.push_back(episodes[i].second);
      s.run_means.push_back(mean_of(tail));
      s.episode_lengths.insert(s.episode_lengths.end(), tail.begin(), tail.end());
    }
    // sorted so the summary does not depend on map ordering of run ids
    std::sort(s.run_means.begin(), s.run_means.end());
    std::sort(s.episode_lengths.begin(), s.episode_lengths.end());
    s.n = static_cast<int>(s.run_means.size());
    s.mean = mean_of(s.run_means);
    s.sd = s.n > 1 ? sample_sd(s.run_means) : 0.0;
    s.episode_n = static_cast<int>(s.episode_lengths.size());
    s.episode_mean = mean_of(s.episode_lengths);
    s.episode_sd = sample_sd(s.episode_lengths);
    out.emplace(key, std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Student's t distribution via the regularized incomplete beta function.

namespace detail {

// Continued fraction for I_x(a, b) (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

inline double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// P(|T| >= |t|) for T ~ Student-t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

enum class TTestKind { Pooled, Welch };

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool degenerate_variance = false;  // both samples constant
};

inline TTestResult t_test(const std::vector<double>& a, const std::vector<double>& b,
                          TTestKind kind = TTestKind::Pooled) {
  if (a.size() < 2 || b.size() < 2) throw InvalidInput("t_test needs at least two observations per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = std::pow(sample_sd(a), 2), vb = std::pow(sample_sd(b), 2);

  TTestResult r;
  double se = 0.0;
  if (kind == TTestKind::Pooled) {
    r.df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  } else {
    const double qa = va / na, qb = vb / nb;
    se = std::sqrt(qa + qb);
    r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  }

  if (se == 0.0) {
    r.degenerate_variance = true;
    if (kind == TTestKind::Welch) r.df = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = (ma - mb) / se;
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

// Holm step-down: walk p-values in ascending order, rejecting while
// p_(i) <= alpha / (m - i). Decisions come back in input order.
inline std::vector<bool> holm_bonferroni(const std::vector<double>& p_values, double alpha) {
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("p-values must lie in [0, 1]");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (p_values[order[i]] <= alpha / static_cast<double>(m - i))
      reject[order[i]] = true;
    else
      break;
  }
  return reject;
}

struct CurvePoint {
  int bin = 0;
  double mean = 0.0;
  double se = 0.0;  // cross-run SD / sqrt(n); 0 when n < 2
  int n = 0;
};

// Records of one (algorithm, setting) cell: bins each run's episodes by
// index, averages within the run, then across runs.
inline std::vector<CurvePoint> learning_curve(const std::vector<EpisodeRecord>& records, int bin_size) {
  if (bin_size < 1) throw InvalidInput("bin_size must be positive");
  std::map<std::pair<std::string, std::uint64_t>, std::map<int, std::vector<double>>> per_run;
  for (const auto& r : records) per_run[{r.run_id, r.seed}][r.episode / bin_size].push_back(r.length);

  std::map<int, std::vector<double>> per_bin;
  for (const auto& [run, bins] : per_run)
    for (const auto& [bin, lengths] : bins) per_bin[bin].push_back(mean_of(lengths));

  std::vector<CurvePoint> curve;
  for (auto& [bin, means] : per_bin) {
    std::sort(means.begin(), means.end());
    CurvePoint p;
    p.bin = bin;
    p.n = static_cast<int>(means.size());
    p.mean = mean_of(means);
    p.se = p.n > 1 ? sample_sd(means) / std::sqrt(static_cast<double>(p.n)) : 0.0;
    curve.push_back(p);
  }
  return curve;
}

}  // namespace limbrl
