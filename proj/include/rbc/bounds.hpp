// Closed-form stopping thresholds and probabilities for a single positive
// evidence channel, evidence proportional to [eps, 1, ..., 1] on the true class.
// Everything here uses natural logarithms.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbc/simplex.hpp"

namespace rbc {

/// Abramowitz-Stegun 7.1.26, |error| <= 1.5e-7, odd by construction. The
/// polynomial is rescaled by its value at t = 1 so that erf(0) is exactly 0.
inline double erf(double x) {
  constexpr double kAtZero = 0.254829592 + (-0.284496736 + (1.421413741 + (-1.453152027 + 1.061405429)));
  if (std::isnan(x)) return x;
  const double ax = std::abs(x);
  const double t = 1.0 / (1.0 + 0.3275911 * ax);
  const double poly =
      t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
  const double y = 1.0 - poly / kAtZero * std::exp(-ax * ax);
  return x < 0.0 ? -y : y;
}

inline double normal_cdf(double z) { return 0.5 * (1.0 + rbc::erf(z / std::sqrt(2.0))); }

enum class BoundRule { M1, MP, M2norm, M1bar };

struct BoundQuery {
  SimplexPoint prior;
  std::size_t true_index = 0;
  std::size_t competitor_index = 1;
  double tau = 0.8;
  double mu = 0.0;
  double c = 1.0;
  int s = 1;
  BoundRule rule_kind = BoundRule::M1;
};

namespace detail {

inline void check_query(const BoundQuery& q) {
  const std::size_t n = q.prior.size();
  if (q.true_index >= n || q.competitor_index >= n || q.true_index == q.competitor_index) {
    throw std::domain_error("BoundQuery: indices must be distinct and < n");
  }
  const double p1 = q.prior[q.true_index];
  if (!(p1 > 0.0 && p1 < 1.0)) throw std::domain_error("BoundQuery: true-class mass must lie in (0, 1)");
  if (!(q.tau > 0.0 && q.tau < 1.0)) throw std::domain_error("BoundQuery: tau must lie in (0, 1)");
}

}  // namespace detail

/// Confidence level matched to tau in n classes.
inline double m1bar_tau(const BoundQuery& q) {
  const double n = static_cast<double>(q.prior.size());
  return ((2.0 * q.tau - 1.0) * (n - 1.0) + 1.0) / n;
}

/// Evidence product the true class must exceed for the state to be inside the region.
inline double stop_threshold_k(const BoundQuery& q) {
  detail::check_query(q);
  const double p1 = q.prior[q.true_index];
  const double tau = q.tau;
  switch (q.rule_kind) {
    case BoundRule::M1: return (1.0 - p1) * tau / ((1.0 - tau) * p1);
    case BoundRule::MP: {
      const double t2 = 2.0 * tau - 1.0;
      return ((1.0 - p1) * t2 + q.prior[q.competitor_index]) / ((1.0 - t2) * p1);
    }
    case BoundRule::M2norm:
      if (!(tau > 0.5)) throw std::domain_error("M2norm bound requires tau > 0.5");
      return (1.0 - p1) * (tau + std::sqrt(2.0 * tau - 1.0)) / ((1.0 - tau) * (1.0 - tau) * p1);
    case BoundRule::M1bar: {
      BoundQuery m1 = q;
      m1.rule_kind = BoundRule::M1;
      m1.tau = m1bar_tau(q);
      return stop_threshold_k(m1);
    }
  }
  throw std::logic_error("stop_threshold_k: unknown rule");
}

/// ln k / ln eps; the state first enters the region at the smallest integer s > this value.
inline double min_sequences_constant_evidence(const BoundQuery& q, double eps) {
  if (!(eps > 1.0)) throw std::domain_error("min_sequences_constant_evidence: eps must be > 1");
  return std::log(stop_threshold_k(q)) / std::log(eps);
}

/// Smallest integer strictly above the real threshold (never below zero).
inline int first_stop_sequence(double s_hat) {
  if (s_hat < 0.0) return 0;
  return static_cast<int>(std::floor(s_hat)) + 1;
}

inline double stop_probability_lognormal(const BoundQuery& q) {
  if (q.s < 1) throw std::domain_error("stop_probability_lognormal: s must be >= 1");
  if (!(q.c > 0.0)) throw std::domain_error("stop_probability_lognormal: c must be > 0");
  const double k = stop_threshold_k(q);
  const double s = static_cast<double>(q.s);
  return 0.5 - 0.5 * rbc::erf((std::log(k) - s * q.mu) / (std::sqrt(2.0 * s) * q.c));
}

/// Competitor threshold k': a false stop happens when the evidence product falls below it.
inline double false_stop_threshold(const BoundQuery& q, BoundRule variant) {
  detail::check_query(q);
  const double p1 = q.prior[q.true_index];
  const double p2 = q.prior[q.competitor_index];
  const double tau = q.tau;
  const double n = static_cast<double>(q.prior.size());
  switch (variant) {
    case BoundRule::M1: return (p2 - (1.0 - p1) * tau) / (tau * p1);
    case BoundRule::MP: return (p2 - (1.0 - p1) * (2.0 * tau - 1.0)) / (2.0 * tau * p1);
    case BoundRule::M1bar: {
      const double a = (n - 1.0) * (2.0 * tau - 1.0) + 1.0;
      return (n * p2 - (1.0 - p1) * a) / (a * p1);
    }
    case BoundRule::M2norm: break;
  }
  throw std::domain_error("false_stop_threshold: variant must be M1, MP or M1bar");
}

/// P(evidence product < k') with the product lognormal(s mu, s c^2); zero when k' <= 0.
inline double false_stop_probability(const BoundQuery& q, BoundRule variant) {
  if (q.s < 1) throw std::domain_error("false_stop_probability: s must be >= 1");
  if (!(q.c > 0.0)) throw std::domain_error("false_stop_probability: c must be > 0");
  const double k = false_stop_threshold(q, variant);
  if (!(k > 0.0)) return 0.0;
  const double s = static_cast<double>(q.s);
  return normal_cdf((std::log(k) - s * q.mu) / (std::sqrt(s) * q.c));
}

struct OrderingViolation {
  int s;
  std::string relation;
  double lhs;
  double rhs;
};

struct OrderingReport {
  std::vector<int> s_values;
  std::vector<double> tp_m1, tp_mp, fa_m1, fa_mp, fa_m1bar;
  std::vector<OrderingViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks TP(MP) >= TP(M1) and FA(M1) <= FA(MP) <= FA(M1bar) at every s.
inline OrderingReport verify_stop_ordering(const BoundQuery& q, const std::vector<int>& s_range) {
  OrderingReport r;
  for (int s : s_range) {
    BoundQuery at = q;
    at.s = s;
    at.rule_kind = BoundRule::M1;
    const double tp1 = stop_probability_lognormal(at);
    at.rule_kind = BoundRule::MP;
    const double tpp = stop_probability_lognormal(at);
    const double fa1 = false_stop_probability(at, BoundRule::M1);
    const double fap = false_stop_probability(at, BoundRule::MP);
    const double fab = false_stop_probability(at, BoundRule::M1bar);
    r.s_values.push_back(s);
    r.tp_m1.push_back(tp1);
    r.tp_mp.push_back(tpp);
    r.fa_m1.push_back(fa1);
    r.fa_mp.push_back(fap);
    r.fa_m1bar.push_back(fab);
    if (tpp < tp1) r.violations.push_back({s, "TP(MP) >= TP(M1)", tpp, tp1});
    if (fa1 > fap) r.violations.push_back({s, "FA(M1) <= FA(MP)", fa1, fap});
    if (fap > fab) r.violations.push_back({s, "FA(MP) <= FA(M1bar)", fap, fab});
  }
  return r;
}

}  // namespace rbc
