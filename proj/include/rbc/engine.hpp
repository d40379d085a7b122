// The recursive classification loop: check the stopping rule, query, fuse the
// evidence with oplus, repeat; decide by MAP once the rule fires.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "rbc/criteria.hpp"
#include "rbc/rng.hpp"
#include "rbc/simplex.hpp"

namespace rbc {

/// Two lognormal channels: queried true class (positive) and queried other classes (negative).
struct EvidenceModel {
  double mu_pos = 0.0;
  double c_pos = 1.0;
  double mu_neg = 0.0;
  double c_neg = 1.0;

  // Zero spreads are allowed; they give the deterministic constant-evidence model.
  void validate() const {
    if (!std::isfinite(mu_pos) || !std::isfinite(mu_neg)) throw std::domain_error("EvidenceModel: means must be finite");
    if (!(c_pos >= 0.0) || !(c_neg >= 0.0) || !std::isfinite(c_pos) || !std::isfinite(c_neg)) {
      throw std::domain_error("EvidenceModel: log-stds must be finite and >= 0");
    }
  }
};

struct Broadcast {};
struct TopN {
  std::size_t N;
};
using QueryScheme = std::variant<Broadcast, TopN>;

struct TrialConfig {
  SimplexPoint prior;
  std::size_t true_index = 0;
  StoppingRule rule;
  QueryScheme scheme = Broadcast{};
  EvidenceModel model;
  int max_sequences = 100;
  std::uint64_t seed = 0;
  // Evaluate the rule on the prior before any evidence is collected.
  bool check_prior = true;
  bool record_trajectory = true;
};

struct TrialOutcome {
  // Number of evidence updates before the stop (0 = stopped on the prior); empty when censored.
  std::optional<int> stopped_at;
  std::optional<std::size_t> decision;
  std::optional<bool> correct;
  std::size_t final_map = 0;
  int sequences_run = 0;
  std::vector<SimplexPoint> trajectory;
};

/// Which classes get a channel draw this sequence, given the latest posterior.
inline std::vector<bool> queried_set(const SimplexPoint& p, const QueryScheme& scheme) {
  const std::size_t n = p.size();
  if (std::holds_alternative<Broadcast>(scheme)) return std::vector<bool>(n, true);
  const std::size_t N = std::get<TopN>(scheme).N;
  if (N < 1 || N > n) throw std::domain_error("TopN: N must lie in [1, n]");
  // Stable ordering by descending probability keeps lowest index first on ties.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  std::vector<bool> q(n, false);
  for (std::size_t k = 0; k < N; ++k) q[order[k]] = true;
  return q;
}

/**
 * One sequence of evidence. Every class consumes a draw in index order even if
 * it is not queried, so trials that share a seed see the same channel noise
 * whatever the query scheme or rule does.
 */
inline LikelihoodVector sample_evidence(const EvidenceModel& model, const std::vector<bool>& queried,
                                        std::size_t true_index, Rng& rng) {
  std::vector<double> e(queried.size());
  for (std::size_t i = 0; i < queried.size(); ++i) {
    const double z = rng.normal();
    const double mu = i == true_index ? model.mu_pos : model.mu_neg;
    const double c = i == true_index ? model.c_pos : model.c_neg;
    e[i] = queried[i] ? std::exp(mu + c * z) : 1.0;
  }
  return LikelihoodVector(std::move(e));
}

inline void validate(const TrialConfig& cfg) {
  if (cfg.true_index >= cfg.prior.size()) throw std::domain_error("TrialConfig: true_index out of range");
  if (cfg.max_sequences < 1) throw std::domain_error("TrialConfig: max_sequences must be >= 1");
  if (cfg.rule.n != cfg.prior.size()) throw DimensionError("TrialConfig: rule and prior dimensions differ");
  cfg.model.validate();
  if (const auto* t = std::get_if<TopN>(&cfg.scheme); t && (t->N < 1 || t->N > cfg.prior.size())) {
    throw std::domain_error("TrialConfig: TopN N must lie in [1, n]");
  }
}

inline TrialOutcome run_trial(const TrialConfig& cfg) {
  validate(cfg);
  TrialOutcome out;
  Rng rng(cfg.seed);
  SimplexPoint p = cfg.prior;
  CriterionState state;
  if (cfg.record_trajectory) out.trajectory.push_back(p);

  auto finish = [&](int s) {
    out.stopped_at = s;
    out.decision = p.argmax();
    out.correct = *out.decision == cfg.true_index;
  };

  if (cfg.check_prior) {
    auto d = should_stop(cfg.rule, state, p);
    state = std::move(d.state);
    if (d.stop) {
      finish(0);
      out.final_map = p.argmax();
      return out;
    }
  }
  for (int s = 1; s <= cfg.max_sequences; ++s) {
    const auto e = sample_evidence(cfg.model, queried_set(p, cfg.scheme), cfg.true_index, rng);
    p = oplus(p, e);
    out.sequences_run = s;
    if (cfg.record_trajectory) out.trajectory.push_back(p);
    auto d = should_stop(cfg.rule, state, p);
    state = std::move(d.state);
    if (d.stop) {
      finish(s);
      break;
    }
  }
  out.final_map = p.argmax();
  return out;
}

/// Posterior path of fixed length with no stopping rule; prior included.
inline std::vector<SimplexPoint> simulate_path(const SimplexPoint& prior, std::size_t true_index,
                                               const QueryScheme& scheme, const EvidenceModel& model, int length,
                                               std::uint64_t seed) {
  if (true_index >= prior.size()) throw std::domain_error("simulate_path: true_index out of range");
  model.validate();
  Rng rng(seed);
  std::vector<SimplexPoint> path{prior};
  path.reserve(static_cast<std::size_t>(std::max(length, 0)) + 1);
  for (int s = 0; s < length; ++s) {
    path.push_back(oplus(path.back(), sample_evidence(model, queried_set(path.back(), scheme), true_index, rng)));
  }
  return path;
}

}  // namespace rbc
