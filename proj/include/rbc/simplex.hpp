// Categorical distributions on the probability simplex and the Aitchison
// algebra behind recursive Bayesian updates. Values are kept in both linear
// and log form so long evidence chains never underflow. Entropies are in bits.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbc {

/// Thrown when two vectors that must share a length do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530941723212145818;

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

/// log(sum(exp(x))) over the finite entries; -inf when every entry is -inf.
inline double log_sum_exp(std::span<const double> logs) {
  double hi = kNegInf;
  for (double v : logs) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : logs) {
    if (v != kNegInf) acc += std::exp(v - hi);
  }
  return hi + std::log(acc);
}

}  // namespace detail

/**
 * A categorical distribution p in the closed simplex (n >= 2).
 *
 * Entries equal to zero are allowed and are absorbing under oplus. The
 * dimension is fixed at construction.
 */
class SimplexPoint {
 public:
  /// Builds from probabilities that already sum to one (|sum - 1| <= 1e-9).
  static SimplexPoint from_probs(std::vector<double> probs) {
    validate_nonnegative(probs);
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::domain_error("SimplexPoint: probabilities sum to " + std::to_string(total));
    }
    return closure(std::move(probs));
  }

  /// Closure operator: rescales any non-negative, not-all-zero vector onto the simplex.
  static SimplexPoint closure(std::vector<double> weights) {
    validate_nonnegative(weights);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw std::domain_error("SimplexPoint: all weights are zero");
    std::vector<double> logs(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      logs[i] = weights[i] > 0.0 ? std::log(weights[i]) - std::log(total) : detail::kNegInf;
      weights[i] /= total;
    }
    return SimplexPoint(std::move(weights), std::move(logs));
  }

  /// Builds from unnormalized natural-log weights (-inf marks an exact zero).
  static SimplexPoint from_log_weights(std::vector<double> logs) {
    if (logs.size() < 2) throw std::domain_error("SimplexPoint: need at least two classes");
    for (double v : logs) {
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        throw std::domain_error("SimplexPoint: invalid log weight");
      }
    }
    const double lse = detail::log_sum_exp(logs);
    if (lse == detail::kNegInf) throw std::domain_error("SimplexPoint: all weights are zero");
    std::vector<double> probs(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
      if (logs[i] != detail::kNegInf) logs[i] -= lse;
      probs[i] = logs[i] == detail::kNegInf ? 0.0 : std::exp(logs[i]);
    }
    return SimplexPoint(std::move(probs), std::move(logs));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  /// Natural-log probabilities; -inf for exact zeros.
  std::span<const double> log_probs() const { return logs_; }

  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
  }
  double max() const { return probs_[argmax()]; }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  SimplexPoint(std::vector<double> probs, std::vector<double> logs)
      : probs_(std::move(probs)), logs_(std::move(logs)) {}

  static void validate_nonnegative(const std::vector<double>& v) {
    if (v.size() < 2) throw std::domain_error("SimplexPoint: need at least two classes");
    for (double x : v) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::domain_error("SimplexPoint: entries must be finite and non-negative");
      }
    }
  }

  friend SimplexPoint oplus_impl(const SimplexPoint&, std::span<const double>);
  friend SimplexPoint otimes(const SimplexPoint&, double);

  std::vector<double> probs_;
  std::vector<double> logs_;
};

/// Unnormalized per-class evidence p(e | class). Every entry is finite and > 0.
class LikelihoodVector {
 public:
  explicit LikelihoodVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::domain_error("LikelihoodVector: empty");
    for (double v : values_) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::domain_error("LikelihoodVector: entries must be finite and > 0");
      }
    }
  }
  /// All-ones vector of length n; the neutral element of oplus.
  static LikelihoodVector neutral(std::size_t n) { return LikelihoodVector(std::vector<double>(n, 1.0)); }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

inline SimplexPoint oplus_impl(const SimplexPoint& p, std::span<const double> e) {
  const std::size_t n = p.size();
  std::vector<double> logs(n);
  std::vector<double> lin(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    logs[i] = p.logs_[i] == detail::kNegInf ? detail::kNegInf : p.logs_[i] + std::log(e[i]);
    lin[i] = p.probs_[i] * e[i];
    total += lin[i];
  }
  const double lse = detail::log_sum_exp(logs);
  // The product form is exact enough as long as nothing underflowed or overflowed;
  // otherwise the probabilities are recovered from the logarithms.
  bool linear_ok = std::isfinite(total) && total >= std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < n && linear_ok; ++i) {
    if (logs[i] != detail::kNegInf && lin[i] < std::numeric_limits<double>::min()) linear_ok = false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (logs[i] != detail::kNegInf) logs[i] -= lse;
    if (linear_ok) {
      lin[i] /= total;
    } else {
      lin[i] = logs[i] == detail::kNegInf ? 0.0 : std::exp(logs[i]);
    }
  }
  return SimplexPoint(std::move(lin), std::move(logs));
}

/// Perturbation: Bayes' rule as componentwise product followed by closure.
inline SimplexPoint oplus(const SimplexPoint& p, const LikelihoodVector& e) {
  detail::require_same_size(p.size(), e.size(), "oplus");
  return oplus_impl(p, e.values());
}

/// Simplex addition of two distributions.
inline SimplexPoint oplus(const SimplexPoint& p, const SimplexPoint& q) {
  detail::require_same_size(p.size(), q.size(), "oplus");
  std::vector<double> logs(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p.log_probs()[i];
    const double b = q.log_probs()[i];
    logs[i] = (a == detail::kNegInf || b == detail::kNegInf) ? detail::kNegInf : a + b;
  }
  return SimplexPoint::from_log_weights(std::move(logs));
}

/// Powering: p_i^lambda / sum_k p_k^lambda. Zero entries need lambda > 0.
inline SimplexPoint otimes(const SimplexPoint& p, double lambda) {
  if (!std::isfinite(lambda)) throw std::domain_error("otimes: scalar must be finite");
  std::vector<double> logs(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.logs_[i] == detail::kNegInf) {
      if (lambda <= 0.0) throw std::domain_error("otimes: non-positive power of a zero entry");
      logs[i] = detail::kNegInf;
    } else {
      logs[i] = lambda * p.logs_[i];
    }
  }
  return SimplexPoint::from_log_weights(std::move(logs));
}

// ---------------------------------------------------------------------------
// Special points

inline SimplexPoint uniform(std::size_t n) {
  if (n < 2) throw std::domain_error("uniform: n must be >= 2");
  return SimplexPoint::closure(std::vector<double>(n, 1.0));
}

inline SimplexPoint corner(std::size_t n, std::size_t i) {
  if (n < 2 || i >= n) throw std::domain_error("corner: index out of range");
  std::vector<double> p(n, 0.0);
  p[i] = 1.0;
  return SimplexPoint::closure(std::move(p));
}

namespace detail {
inline void check_tau(double tau, std::size_t n, std::size_t i) {
  if (n < 2 || i >= n) throw std::domain_error("special point: index out of range");
  const double lo = 1.0 / static_cast<double>(n);
  if (!(tau >= lo - 1e-15 && tau <= 1.0)) {
    throw std::domain_error("special point: tau must lie in [1/n, 1]");
  }
}
}  // namespace detail

/// v_n(tau): tau at slot i, the rest shared uniformly.
inline SimplexPoint v_point(std::size_t n, double tau, std::size_t i = 0) {
  detail::check_tau(tau, n, i);
  std::vector<double> p(n, (1.0 - tau) / static_cast<double>(n - 1));
  p[i] = tau;
  return SimplexPoint::closure(std::move(p));
}

/// w_n(tau): tau at slot i, 1 - tau at slot (i + 1) mod n, zero elsewhere.
inline SimplexPoint w_point(std::size_t n, double tau, std::size_t i = 0) {
  detail::check_tau(tau, n, i);
  std::vector<double> p(n, 0.0);
  p[i] = tau;
  p[(i + 1) % n] = 1.0 - tau;
  return SimplexPoint::closure(std::move(p));
}

enum class SpecialKind { Uniform, V, W, Corner };

inline SimplexPoint special_point(SpecialKind kind, std::size_t n, double tau = 1.0, std::size_t i = 0) {
  switch (kind) {
    case SpecialKind::Uniform: return uniform(n);
    case SpecialKind::V: return v_point(n, tau, i);
    case SpecialKind::W: return w_point(n, tau, i);
    case SpecialKind::Corner: return corner(n, i);
  }
  throw std::logic_error("special_point: unknown kind");
}

// ---------------------------------------------------------------------------
// Entropies and divergences (bits)

inline double shannon_entropy(const SimplexPoint& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * p.log_probs()[i];
  }
  return std::max(0.0, h / detail::kLn2);
}

/// Renyi entropy of order alpha >= 0, alpha != 1. Order 0 counts the support.
inline double renyi_entropy(const SimplexPoint& p, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::domain_error("renyi_entropy: alpha must be >= 0");
  if (alpha == 1.0) throw std::domain_error("renyi_entropy: alpha == 1, use shannon_entropy");
  std::vector<double> scaled;
  scaled.reserve(p.size());
  for (double l : p.log_probs()) {
    if (l != detail::kNegInf) scaled.push_back(alpha * l);
  }
  const double h = detail::log_sum_exp(scaled) / ((1.0 - alpha) * detail::kLn2);
  return std::max(0.0, h);
}

/// KL(p || q) in bits; requires q_i = 0 => p_i = 0.
inline double kl_divergence(const SimplexPoint& p, const SimplexPoint& q) {
  detail::require_same_size(p.size(), q.size(), "kl_divergence");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw std::domain_error("kl_divergence: p not absolutely continuous w.r.t. q");
    d += p[i] * (p.log_probs()[i] - q.log_probs()[i]);
  }
  return std::max(0.0, d / detail::kLn2);
}

// ---------------------------------------------------------------------------
// Geometry

/// l2 projection onto the line through u_n and corner i.
inline SimplexPoint project_to_center_line(const SimplexPoint& p, std::size_t i) {
  if (i >= p.size()) throw std::domain_error("project_to_center_line: index out of range");
  const std::size_t n = p.size();
  std::vector<double> out(n, (1.0 - p[i]) / static_cast<double>(n - 1));
  out[i] = p[i];
  return SimplexPoint::closure(std::move(out));
}

inline double center_line_distance(const SimplexPoint& p, std::size_t i) {
  if (i >= p.size()) throw std::domain_error("center_line_distance: index out of range");
  const double rest = (1.0 - p[i]) / static_cast<double>(p.size() - 1);
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k == i) continue;
    acc += (p[k] - rest) * (p[k] - rest);
  }
  return std::sqrt(acc);
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
  detail::require_same_size(a.size(), b.size(), "l2_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

/// Largest and second-largest coordinates. Ties go to the lowest index.
struct TopTwo {
  std::size_t j1 = 0;
  std::size_t j2 = 1;
  double gap = 0.0;
};

inline TopTwo top_two(std::span<const double> p) {
  if (p.size() < 2) throw std::domain_error("top_two: need at least two entries");
  TopTwo t;
  t.j1 = p[1] > p[0] ? 1 : 0;
  t.j2 = 1 - t.j1;
  for (std::size_t i = 2; i < p.size(); ++i) {
    if (p[i] > p[t.j1]) {
      t.j2 = t.j1;
      t.j1 = i;
    } else if (p[i] > p[t.j2]) {
      t.j2 = i;
    }
  }
  t.gap = p[t.j1] - p[t.j2];
  return t;
}

inline TopTwo top_two(const SimplexPoint& p) { return top_two(p.probs()); }

namespace detail {

// Moves a tied runner-up onto an index the other argument already ranks top-two.
inline void align_runner_up(std::span<const double> p, TopTwo& mine, const TopTwo& other) {
  std::size_t best = mine.j2;
  bool found = false;
  for (std::size_t cand : {other.j1, other.j2}) {
    if (cand == mine.j1 || cand == mine.j2 || p[cand] != p[mine.j2]) continue;
    if (!found || cand < best) best = cand;
    found = true;
  }
  if (found) mine.j2 = best;
}

/// Interest set {j1, j2, k1, k2} (deduplicated, ascending).
inline std::vector<std::size_t> interest_set(std::span<const double> p, std::span<const double> q) {
  TopTwo tp = top_two(p);
  TopTwo tq = top_two(q);
  align_runner_up(q, tq, tp);
  align_runner_up(p, tp, tq);
  std::vector<std::size_t> idx{tp.j1, tp.j2, tq.j1, tq.j2};
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

}  // namespace detail

/**
 * Top-two l1 distance: sum of |p_i - q_i| over the union of both arguments'
 * two largest coordinates. Runner-up ties prefer an index the other argument
 * already holds in its top two, then the lowest index.
 */
inline double delta_mp(const SimplexPoint& p, const SimplexPoint& q) {
  detail::require_same_size(p.size(), q.size(), "delta_mp");
  double d = 0.0;
  for (std::size_t i : detail::interest_set(p.probs(), q.probs())) d += std::abs(p[i] - q[i]);
  return d;
}

}  // namespace rbc
