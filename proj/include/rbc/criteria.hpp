// Stopping criteria M1-M5, the top-two gap rule MP and the lower-confidence
// comparator M1bar, all calibrated so their boundaries meet at v_n(tau).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rbc/simplex.hpp"

namespace rbc {

enum class Family { M1, M2, M3, M4, M5, MP, M1bar };

inline constexpr Family kAllFamilies[] = {Family::MP, Family::M1, Family::M2, Family::M3,
                                          Family::M4, Family::M5, Family::M1bar};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::M1: return "M1";
    case Family::M2: return "M2";
    case Family::M3: return "M3";
    case Family::M4: return "M4";
    case Family::M5: return "M5";
    case Family::MP: return "MP";
    case Family::M1bar: return "M1bar";
  }
  return "?";
}

inline std::optional<Family> parse_family(std::string_view s) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

inline constexpr double kKlThreshold = 1e-2;
inline constexpr double kM2Alpha = 2.0;
inline constexpr double kM4Alpha = 0.2;

struct Confidence {
  double tau;
};
struct RenyiEntropy {
  double alpha;
  double c;
};
struct ShannonEntropy {
  double c;
};
struct KLConsecutive {
  double c;
};
struct GapMP {
  double tau_bar;
};
struct ConfidenceLower {
  double tau_tilde;
};

using Criterion = std::variant<Confidence, RenyiEntropy, ShannonEntropy, KLConsecutive, GapMP, ConfidenceLower>;

struct StoppingRule {
  Family family;
  std::size_t n;
  double source_tau;
  Criterion criterion;
};

/// Only M5 reads this: the posterior seen at the previous evaluation.
struct CriterionState {
  std::optional<SimplexPoint> previous_posterior;
};

namespace detail {
inline void check_calibration(double tau, std::size_t n) {
  if (n < 2) throw std::domain_error("calibrate: n must be >= 2");
  if (!(tau > 1.0 / static_cast<double>(n)) || !(tau <= 1.0)) {
    throw std::domain_error("calibrate: tau must lie in (1/n, 1]");
  }
}
}  // namespace detail

inline double m1bar_threshold(double tau, std::size_t n) {
  const double nn = static_cast<double>(n);
  return ((2.0 * tau - 1.0) * (nn - 1.0) + 1.0) / nn;
}

/// Renyi-entropy rule with a free order; M2 and M4 are alpha = 2 and 0.2.
inline StoppingRule calibrate_renyi(double alpha, double tau, std::size_t n, Family family = Family::M2) {
  detail::check_calibration(tau, n);
  return {family, n, tau, RenyiEntropy{alpha, renyi_entropy(v_point(n, tau), alpha)}};
}

inline StoppingRule calibrate(Family family, double tau, std::size_t n) {
  detail::check_calibration(tau, n);
  switch (family) {
    case Family::M1: return {family, n, tau, Confidence{tau}};
    case Family::M2: return calibrate_renyi(kM2Alpha, tau, n, Family::M2);
    case Family::M3: return {family, n, tau, ShannonEntropy{shannon_entropy(v_point(n, tau))}};
    case Family::M4: return calibrate_renyi(kM4Alpha, tau, n, Family::M4);
    case Family::M5: return {family, n, tau, KLConsecutive{kKlThreshold}};
    case Family::MP: return {family, n, tau, GapMP{2.0 - 2.0 * tau}};
    case Family::M1bar: return {family, n, tau, ConfidenceLower{m1bar_threshold(tau, n)}};
  }
  throw std::logic_error("calibrate: unknown family");
}

/// The threshold a rule compares against (gap threshold 1 - tau_bar for MP).
inline double threshold(const StoppingRule& rule) {
  return std::visit(
      [](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Confidence>) return c.tau;
        else if constexpr (std::is_same_v<T, GapMP>) return 1.0 - c.tau_bar;
        else if constexpr (std::is_same_v<T, ConfidenceLower>) return c.tau_tilde;
        else return c.c;
      },
      rule.criterion);
}

/// The statistic a memoryless rule thresholds. Not defined for M5.
inline double statistic(const StoppingRule& rule, const SimplexPoint& p) {
  return std::visit(
      [&](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Confidence> || std::is_same_v<T, ConfidenceLower>) return p.max();
        else if constexpr (std::is_same_v<T, GapMP>) return top_two(p).gap;
        else if constexpr (std::is_same_v<T, RenyiEntropy>) return renyi_entropy(p, c.alpha);
        else if constexpr (std::is_same_v<T, ShannonEntropy>) return shannon_entropy(p);
        else throw std::domain_error("statistic: consecutive-KL rule has no pointwise statistic");
      },
      rule.criterion);
}

/// True when larger values of the statistic mean more certainty.
inline bool stops_above(const StoppingRule& rule) {
  return std::holds_alternative<Confidence>(rule.criterion) || std::holds_alternative<GapMP>(rule.criterion) ||
         std::holds_alternative<ConfidenceLower>(rule.criterion);
}

struct StopDecision {
  bool stop;
  CriterionState state;
};

inline StopDecision should_stop(const StoppingRule& rule, const CriterionState& state, const SimplexPoint& p) {
  detail::require_same_size(rule.n, p.size(), "should_stop");
  if (const auto* kl = std::get_if<KLConsecutive>(&rule.criterion)) {
    bool stop = false;
    if (state.previous_posterior) {
      // Absorbing zeros keep the support nested, so this direction is always defined.
      stop = kl_divergence(p, *state.previous_posterior) < kl->c;
    }
    return {stop, CriterionState{p}};
  }
  const double stat = statistic(rule, p);
  const double thr = threshold(rule);
  return {stops_above(rule) ? stat > thr : stat < thr, CriterionState{}};
}

/// Stateless convenience form for memoryless rules.
inline bool should_stop(const StoppingRule& rule, const SimplexPoint& p) {
  return should_stop(rule, CriterionState{}, p).stop;
}

inline double binary_entropy(double t) {
  auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
  return term(t) + term(1.0 - t);
}

/**
 * Smallest max-probability reachable on the Shannon contour through v_n(tau):
 * the point w_n(t) on a simplex edge with the same entropy. None when that
 * contour does not reach an edge (entropy of v_n(tau) at least one bit).
 */
inline std::optional<double> min_confidence_on_entropy_contour(double tau, std::size_t n) {
  detail::check_calibration(tau, n);
  const double target = shannon_entropy(v_point(n, tau));
  if (!(target < 1.0)) return std::nullopt;
  double lo = 0.5;
  double hi = 1.0 - 1e-15;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (binary_entropy(mid) > target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Kittler's two-element divergence with the remainder-mass term.
inline double delta2_divergence(const SimplexPoint& p, const SimplexPoint& q) {
  detail::require_same_size(p.size(), q.size(), "delta2_divergence");
  const auto idx = detail::interest_set(p.probs(), q.probs());
  double top = 0.0;
  double rest_p = 0.0;
  double rest_q = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (k < idx.size() && idx[k] == i) {
      top += std::abs(p[i] - q[i]);
      ++k;
    } else {
      rest_p += p[i];
      rest_q += q[i];
    }
  }
  return 0.5 * (top + std::abs(rest_p - rest_q));
}

/**
 * Points on the stopping boundary of a rule over the 3-class simplex, ordered
 * by angle around u_3.
 *
 * Along any ray from u_3 the statistic is monotone, so each ray crosses the
 * boundary at most once and bisection finds the crossing. A fine angular scan
 * first finds the rays that cross at all (the others reach the simplex edge
 * while still outside the region); `resolution` rays are then spread evenly
 * over those. M5 has no boundary.
 */
inline std::vector<SimplexPoint> boundary_sample(const StoppingRule& rule, std::size_t resolution) {
  if (rule.n != 3) throw std::domain_error("boundary_sample: only defined for n = 3");
  std::vector<SimplexPoint> out;
  if (std::holds_alternative<KLConsecutive>(rule.criterion) || resolution == 0) return out;
  const double thr = threshold(rule);
  const bool above = stops_above(rule);
  const double pi = std::acos(-1.0);
  const double s6 = std::sqrt(6.0);
  const double s2 = std::sqrt(2.0);

  struct Ray {
    double d[3];
    double tmax;
  };
  auto make_ray = [&](double theta) {
    Ray r{{2.0 * std::cos(theta) / s6, -std::cos(theta) / s6 + std::sin(theta) / s2,
           -std::cos(theta) / s6 - std::sin(theta) / s2},
          std::numeric_limits<double>::infinity()};
    for (double di : r.d) {
      if (di < 0.0) r.tmax = std::min(r.tmax, (1.0 / 3.0) / -di);
    }
    return r;
  };
  auto at = [](const Ray& r, double t) {
    std::vector<double> p(3);
    for (int i = 0; i < 3; ++i) p[i] = std::max(0.0, 1.0 / 3.0 + t * r.d[i]);
    return SimplexPoint::closure(std::move(p));
  };
  // Inside means at or past the threshold.
  auto inside = [&](const Ray& r, double t) {
    const double v = statistic(rule, at(r, t));
    return above ? v >= thr : v <= thr;
  };

  const std::size_t scan = std::max<std::size_t>(4096, 16 * resolution);
  std::vector<double> crossing;
  for (std::size_t k = 0; k < scan; ++k) {
    const double theta = 2.0 * pi * static_cast<double>(k) / static_cast<double>(scan);
    if (inside(make_ray(theta), make_ray(theta).tmax)) crossing.push_back(theta);
  }
  if (crossing.empty()) return out;
  out.reserve(resolution);
  for (std::size_t k = 0; k < resolution; ++k) {
    const Ray r = make_ray(crossing[k * crossing.size() / resolution]);
    double lo = 0.0;
    double hi = r.tmax;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (inside(r, mid)) hi = mid;
      else lo = mid;
    }
    out.push_back(at(r, hi));
  }
  return out;
}

}  // namespace rbc
