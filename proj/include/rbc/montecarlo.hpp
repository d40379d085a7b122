// Monte-Carlo harness: many independent trials per method, aggregated into
// cumulative stop-probability and accuracy-among-stopped curves.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rbc/criteria.hpp"
#include "rbc/engine.hpp"
#include "rbc/rng.hpp"
#include "rbc/simplex.hpp"

namespace rbc {

/// Either a fixed prior or a fixed true-class mass with a fresh random remainder per trial.
struct PriorSpec {
  std::vector<double> probs;
  std::optional<double> random_true_mass;

  static PriorSpec fixed(std::vector<double> p) { return {std::move(p), std::nullopt}; }
  static PriorSpec random_remainder(double true_mass) { return {{}, true_mass}; }

  // Remainder weights are uniform(0, 1) draws rescaled to 1 - true_mass.
  SimplexPoint draw(std::size_t n, std::size_t true_index, Rng& rng) const {
    if (!random_true_mass) return SimplexPoint::from_probs(probs);
    const double m = *random_true_mass;
    if (!(m > 0.0 && m < 1.0)) throw std::domain_error("PriorSpec: true mass must lie in (0, 1)");
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == true_index) continue;
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      w[i] = u;
      total += u;
    }
    for (std::size_t i = 0; i < n; ++i) w[i] = i == true_index ? m : w[i] / total * (1.0 - m);
    return SimplexPoint::closure(std::move(w));
  }
};

struct ExperimentConfig {
  std::size_t n = 3;
  PriorSpec prior;
  std::size_t true_index = 0;
  double tau = 0.8;
  std::vector<Family> methods{std::begin(kAllFamilies), std::end(kAllFamilies)};
  EvidenceModel model;
  QueryScheme scheme = Broadcast{};
  int n_trials = 5000;
  int max_sequences = 100;
  std::uint64_t master_seed = 1;
  bool check_prior = true;
  // Same per-trial evidence stream for every method.
  bool common_random_numbers = true;
  // 0 means: RBC_STOPLAB_THREADS, else hardware concurrency.
  unsigned threads = 0;
};

/// Per-trial record: stopped_at = -1 when censored.
struct TrialRecord {
  int stopped_at = -1;
  bool correct = false;
};

struct MethodResult {
  Family family;
  StoppingRule rule;
  int n_trials = 0;
  // Index k counts trials stopped after at most k updates (k = 0 is the prior).
  std::vector<int> stopped_by;
  std::vector<int> correct_by;
  std::vector<TrialRecord> trials;

  int max_sequences() const { return static_cast<int>(stopped_by.size()) - 1; }
  double p_stop(int k) const { return static_cast<double>(stopped_by.at(k)) / n_trials; }
  /// Zero when nothing has stopped yet.
  double p_true_given_stop(int k) const {
    return stopped_by.at(k) == 0 ? 0.0 : static_cast<double>(correct_by.at(k)) / stopped_by.at(k);
  }
  /// Censored trials count as max_sequences.
  double mean_sequences() const {
    double acc = 0.0;
    for (const auto& t : trials) acc += t.stopped_at < 0 ? max_sequences() : t.stopped_at;
    return trials.empty() ? 0.0 : acc / static_cast<double>(trials.size());
  }
  double accuracy() const { return p_true_given_stop(max_sequences()); }
  int censored() const { return n_trials - stopped_by.back(); }
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<MethodResult> methods;

  const MethodResult& method(Family f) const {
    for (const auto& m : methods) {
      if (m.family == f) return m;
    }
    throw std::out_of_range("ExperimentResult: method not present: " + std::string(to_string(f)));
  }
};

inline unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RBC_STOPLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on a pool; results must be written by index.
template <class F>
void parallel_for(std::size_t count, unsigned workers, F&& body) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.n < 2) throw std::domain_error("ExperimentConfig: n must be >= 2");
  if (cfg.true_index >= cfg.n) throw std::domain_error("ExperimentConfig: true_index out of range");
  if (cfg.n_trials < 1) throw std::domain_error("ExperimentConfig: n_trials must be >= 1");
  if (cfg.max_sequences < 1) throw std::domain_error("ExperimentConfig: max_sequences must be >= 1");
  if (cfg.methods.empty()) throw std::domain_error("ExperimentConfig: no methods");
  if (!cfg.prior.random_true_mass && cfg.prior.probs.size() != cfg.n) {
    throw DimensionError("ExperimentConfig: prior length differs from n");
  }
  cfg.model.validate();
}

inline std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t trial, std::size_t method) {
  return substream_seed(cfg.master_seed, trial, cfg.common_random_numbers ? 0 : 2 + method);
}

inline SimplexPoint trial_prior(const ExperimentConfig& cfg, std::size_t trial) {
  Rng rng(substream_seed(cfg.master_seed, trial, 1));
  return cfg.prior.draw(cfg.n, cfg.true_index, rng);
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult res;
  res.config = cfg;
  const std::size_t m = cfg.methods.size();
  const std::size_t T = static_cast<std::size_t>(cfg.n_trials);
  for (Family f : cfg.methods) {
    MethodResult mr{f, calibrate(f, cfg.tau, cfg.n)};
    mr.n_trials = cfg.n_trials;
    mr.trials.resize(T);
    res.methods.push_back(std::move(mr));
  }
  parallel_for(T, worker_count(cfg.threads), [&](std::size_t t) {
    const SimplexPoint prior = trial_prior(cfg, t);
    for (std::size_t k = 0; k < m; ++k) {
      TrialConfig tc{prior, cfg.true_index, res.methods[k].rule, cfg.scheme, cfg.model,
                     cfg.max_sequences, trial_seed(cfg, t, k), cfg.check_prior, false};
      const TrialOutcome o = run_trial(tc);
      res.methods[k].trials[t] = {o.stopped_at ? *o.stopped_at : -1, o.correct.value_or(false)};
    }
  });
  // Aggregation runs in trial order, so the result does not depend on the pool size.
  for (auto& mr : res.methods) {
    std::vector<int> stop_at(cfg.max_sequences + 1, 0);
    std::vector<int> correct_at(cfg.max_sequences + 1, 0);
    for (const auto& r : mr.trials) {
      if (r.stopped_at < 0) continue;
      ++stop_at[r.stopped_at];
      if (r.correct) ++correct_at[r.stopped_at];
    }
    mr.stopped_by.assign(cfg.max_sequences + 1, 0);
    mr.correct_by.assign(cfg.max_sequences + 1, 0);
    int s_acc = 0;
    int c_acc = 0;
    for (int k = 0; k <= cfg.max_sequences; ++k) {
      s_acc += stop_at[k];
      c_acc += correct_at[k];
      mr.stopped_by[k] = s_acc;
      mr.correct_by[k] = c_acc;
    }
  }
  return res;
}

/// Trials where the first rule stopped strictly before the second (both sharing evidence).
inline std::vector<std::size_t> earlier_stops(const MethodResult& a, const MethodResult& b) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < std::min(a.trials.size(), b.trials.size()); ++t) {
    const int sa = a.trials[t].stopped_at;
    const int sb = b.trials[t].stopped_at;
    if (sa >= 0 && (sb < 0 || sa < sb)) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Published tables

enum class TableId { T2, T3, T4 };

inline std::string_view to_string(TableId t) {
  switch (t) {
    case TableId::T2: return "T2";
    case TableId::T3: return "T3";
    case TableId::T4: return "T4";
  }
  return "?";
}

inline std::optional<TableId> parse_table(std::string_view s) {
  if (s == "T2") return TableId::T2;
  if (s == "T3") return TableId::T3;
  if (s == "T4") return TableId::T4;
  return std::nullopt;
}

struct GoldenRow {
  Family family;
  std::vector<double> p_stop;
  std::vector<double> p_true;
};

struct GoldenTable {
  TableId id;
  int first_column;
  std::vector<GoldenRow> rows;
  ExperimentConfig config;
};

inline constexpr std::uint64_t kDefaultSeed = 20190923;
inline constexpr double kTableTolerance = 0.03;

inline GoldenTable golden_table(TableId id, std::uint64_t seed = kDefaultSeed) {
  GoldenTable g{id, 1, {}, {}};
  ExperimentConfig& c = g.config;
  c.master_seed = seed;
  c.n_trials = 5000;
  c.max_sequences = 100;
  switch (id) {
    case TableId::T2:
      c.n = 3;
      c.prior = PriorSpec::fixed({0.42, 0.55, 0.03});
      c.tau = 0.8;
      c.model = {0.6, 0.5, 0.0, 0.5};
      g.rows = {
          {Family::MP, {.00, .06, .22, .43, .59, .67, .77}, {.00, .67, .86, .96, .97, .98, .99}},
          {Family::M1, {.00, .06, .22, .43, .59, .67, .77}, {.00, .67, .86, .96, .97, .98, .99}},
          {Family::M2, {.00, .08, .27, .47, .62, .70, .79}, {.00, .67, .85, .95, .95, .97, .98}},
          {Family::M3, {.00, .34, .56, .70, .80, .85, .90}, {.00, .20, .48, .63, .74, .80, .87}},
          {Family::M4, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0}, {.00, .55, .72, .82, .87, .90, .94}},
          {Family::M5, {.00, .00, .37, .41, .46, .55, .66}, {.00, .00, .58, .76, .87, .91, .95}},
          {Family::M1bar, {.00, .16, .37, .56, .71, .77, .84}, {.00, .64, .84, .93, .95, .97, .98}},
      };
      break;
    case TableId::T3: {
      c.n = 10;
      std::vector<double> p{0.13, 0.52, 0.30};
      p.resize(10, 0.05 / 7.0);
      c.prior = PriorSpec::fixed(p);
      c.tau = 0.75;
      c.model = {0.8, 0.5, -0.3, 0.5};
      const std::vector<double> ones(9, 1.0);
      g.rows = {
          {Family::MP, {.00, .08, .26, .42, .61, .70, .78, .82, .88}, {.00, .36, .78, .89, .94, .96, .97, .98, .98}},
          {Family::M1, {.00, .03, .18, .35, .54, .66, .76, .81, .86}, {.00, .29, .83, .90, .94, .97, .97, .98, .98}},
          {Family::M2, {.00, .05, .23, .41, .61, .72, .81, .85, .88}, {.00, .32, .80, .89, .94, .96, .97, .98, .98}},
          {Family::M3, ones, {.00, .43, .63, .74, .84, .87, .91, .93, .94}},
          {Family::M4, ones, {.00, .43, .63, .74, .84, .87, .91, .93, .94}},
          {Family::M5, {.00, .00, .35, .40, .47, .55, .62, .69, .76}, {.00, .00, .46, .65, .82, .88, .92, .95, .96}},
          {Family::M1bar, {.00, .48, .67, .79, .88, .92, .94, .95, .97}, {.00, .38, .70, .80, .87, .90, .93, .95, .96}},
      };
      break;
    }
    case TableId::T4: {
      g.first_column = 10;
      c.n = 10;
      c.prior = PriorSpec::random_remainder(0.1);
      c.tau = 0.85;
      c.model = {0.8, 0.5, -0.3, 0.5};
      const std::vector<double> acc_m1{1, .99, .99, 1, 1, 1, 1, 1};
      g.rows = {
          {Family::MP, {.09, .18, .31, .45, .60, .70, .77, .86}, {.95, .98, .98, .99, .99, .99, 1, 1}},
          {Family::M1, {.05, .11, .21, .33, .48, .60, .70, .81}, acc_m1},
          {Family::M2, {.05, .11, .21, .33, .48, .61, .70, .81}, acc_m1},
          {Family::M3, {.05, .12, .22, .34, .49, .61, .71, .81}, acc_m1},
          {Family::M4, {.05, .13, .23, .35, .49, .62, .72, .82}, {.98, .99, .99, 1, 1, 1, 1, 1}},
          {Family::M5, {0, 0, 0, 0, 0, .01, .03, .08}, {0, 0, 0, 0, 0, 1, 1, 1}},
          {Family::M1bar, {.10, .20, .33, .47, .61, .72, .79, .88}, {.94, .98, .98, .99, .99, .99, .99, 1.00}},
      };
      break;
    }
  }
  c.methods.clear();
  for (const auto& r : g.rows) c.methods.push_back(r.family);
  return g;
}

/// Printed column c is compared with the state after c - 1 updates (column 1 is the bare prior).
inline int column_to_updates(int column) { return column - 1; }

struct ComparisonCell {
  std::string table;
  Family method;
  int sequence;
  std::string metric;
  double published;
  double repro;
  double abs_delta;
  bool pass;
};

struct TableReport {
  TableId id;
  ExperimentResult result;
  std::vector<ComparisonCell> cells;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.pass; }));
  }
  bool all_pass() const { return failures() == 0; }
  const ComparisonCell& cell(Family f, int column, std::string_view metric) const {
    for (const auto& c : cells) {
      if (c.method == f && c.sequence == column && c.metric == metric) return c;
    }
    throw std::out_of_range("TableReport: no such cell");
  }
};

inline TableReport compare_to_golden(const GoldenTable& g, ExperimentResult result, double tol = kTableTolerance) {
  TableReport rep{g.id, std::move(result), {}};
  const std::string tname(to_string(g.id));
  for (const auto& row : g.rows) {
    const MethodResult& mr = rep.result.method(row.family);
    for (std::size_t j = 0; j < row.p_stop.size(); ++j) {
      const int column = g.first_column + static_cast<int>(j);
      const int k = column_to_updates(column);
      const double ps = mr.p_stop(k);
      const double pt = mr.p_true_given_stop(k);
      const double d1 = std::abs(ps - row.p_stop[j]);
      const double d2 = std::abs(pt - row.p_true[j]);
      rep.cells.push_back({tname, row.family, column, "p_stop", row.p_stop[j], ps, d1, d1 <= tol});
      rep.cells.push_back({tname, row.family, column, "p_true_given_stop", row.p_true[j], pt, d2, d2 <= tol});
    }
  }
  return rep;
}

inline TableReport reproduce_table(TableId id, std::uint64_t seed = kDefaultSeed, unsigned threads = 0) {
  GoldenTable g = golden_table(id, seed);
  g.config.threads = threads;
  return compare_to_golden(g, run_experiment(g.config));
}

// ---------------------------------------------------------------------------
// Sweeps, trajectories, typing projection

struct SweepPoint {
  Family family;
  double tau;
  double mean_sequences;
  double accuracy;
};

/// One (mean sequences, accuracy) point per method per tau, in tau order. M5 is
/// skipped unless include_m5 is set.
inline std::vector<SweepPoint> speed_accuracy_sweep(ExperimentConfig cfg, const std::vector<double>& tau_list,
                                                    bool include_m5 = false) {
  if (!include_m5) std::erase(cfg.methods, Family::M5);
  std::vector<SweepPoint> out;
  for (double tau : tau_list) {
    if (!(tau > 1.0 / static_cast<double>(cfg.n) && tau < 1.0)) {
      throw std::domain_error("speed_accuracy_sweep: tau must lie in (1/n, 1)");
    }
    cfg.tau = tau;
    const auto res = run_experiment(cfg);
    for (const auto& mr : res.methods) out.push_back({mr.family, tau, mr.mean_sequences(), mr.accuracy()});
  }
  return out;
}

struct TrajectoryEnsemble {
  SimplexPoint prior;
  std::vector<std::vector<SimplexPoint>> trajectories;
  // Componentwise mean over trajectories at each sequence (not renormalized; it already sums to one).
  std::vector<std::vector<double>> mean;
};

struct EnsembleConfig {
  std::size_t true_index = 0;
  EvidenceModel model;
  QueryScheme scheme = Broadcast{};
  int count = 100;
  int length = 20;
  std::uint64_t seed = 1;
};

inline std::vector<TrajectoryEnsemble> trajectory_ensemble(const std::vector<SimplexPoint>& priors,
                                                           const EnsembleConfig& cfg) {
  if (cfg.count < 1 || cfg.length < 0) throw std::domain_error("trajectory_ensemble: bad count or length");
  std::vector<TrajectoryEnsemble> out;
  for (std::size_t pi = 0; pi < priors.size(); ++pi) {
    const SimplexPoint& prior = priors[pi];
    TrajectoryEnsemble e{prior, {}, {}};
    e.mean.assign(static_cast<std::size_t>(cfg.length) + 1, std::vector<double>(prior.size(), 0.0));
    for (int t = 0; t < cfg.count; ++t) {
      auto path = simulate_path(prior, cfg.true_index, cfg.scheme, cfg.model, cfg.length,
                                substream_seed(cfg.seed, static_cast<std::uint64_t>(t), 10 + pi));
      for (std::size_t s = 0; s < path.size(); ++s) {
        for (std::size_t i = 0; i < prior.size(); ++i) e.mean[s][i] += path[s][i] / cfg.count;
      }
      e.trajectories.push_back(std::move(path));
    }
    out.push_back(std::move(e));
  }
  return out;
}

/**
 * Expected sequences to type total_letters when each round types a fraction acc
 * of the remaining letters correctly and retries the rest.
 *
 * Default: every letter attempted in a round costs e_seq (counted before the
 * decrement). literal = true charges the letters still remaining after the
 * decrement, which is how the published pseudocode reads.
 */
inline double letters_projection(double acc, double e_seq, int total_letters = 100, bool literal = false) {
  if (!(acc > 0.0 && acc <= 1.0)) throw std::domain_error("letters_projection: acc must lie in (0, 1]");
  if (!(e_seq > 0.0)) throw std::domain_error("letters_projection: e_seq must be > 0");
  if (total_letters < 0) throw std::domain_error("letters_projection: total_letters must be >= 0");
  long rem = total_letters;
  double total = 0.0;
  while (rem > 0) {
    const long attempted = rem;
    // Rounding guard so 0.9 * 10 lands on 9, not 10.
    rem -= std::max(1L, static_cast<long>(std::ceil(static_cast<double>(rem) * acc - 1e-9)));
    total += static_cast<double>(literal ? rem : attempted) * e_seq;
  }
  return total;
}

}  // namespace rbc
