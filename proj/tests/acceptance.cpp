// Acceptance runner: one [PASS]/[FAIL] line per criterion, details indented
// below it. Exit status is nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rbc/cli.hpp"
#include "rbc/rbc.hpp"

using namespace rbc;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SimplexPoint P(std::vector<double> v) { return SimplexPoint::from_probs(std::move(v)); }

// First column k (updates) at which the cumulative stop rate reaches `level`, or -1.
int first_reaching(const MethodResult& m, double level) {
  for (int k = 0; k <= m.max_sequences(); ++k) {
    if (m.p_stop(k) >= level) return k;
  }
  return -1;
}

void table_summary(Verdict& v, const TableReport& rep) {
  v.check(rep.all_pass(), fmt("%zu of %zu cells within +-%.2f", rep.cells.size() - rep.failures(), rep.cells.size(),
                              kTableTolerance));
  std::size_t shown = 0;
  for (const auto& c : rep.cells) {
    if (c.pass || shown++ >= 6) continue;
    v.notes.push_back(fmt("       %s s=%d %s: published %.2f, got %.4f", std::string(to_string(c.method)).c_str(),
                          c.sequence, c.metric.c_str(), c.published, c.repro));
  }
  if (rep.failures() > shown) v.notes.push_back(fmt("       ... %zu more", rep.failures() - std::min(shown, rep.failures())));
}

// ---------------------------------------------------------------------------

Verdict table2() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = reproduce_table(TableId::T2);
  const double secs = seconds_since(t0);
  table_summary(v, rep);
  const double mp5 = rep.cell(Family::MP, 5, "p_stop").repro;
  const double mp5t = rep.cell(Family::MP, 5, "p_true_given_stop").repro;
  v.check(std::abs(mp5 - 0.59) <= kTableTolerance && std::abs(mp5t - 0.97) <= kTableTolerance,
          fmt("MP s=5 (%.4f, %.4f) vs (0.59, 0.97)", mp5, mp5t));
  const double m4 = rep.cell(Family::M4, 1, "p_stop").repro;
  v.check(std::abs(m4 - 1.0) <= kTableTolerance, fmt("M4 s=1 p_stop %.4f vs 1.00", m4));
  v.check(secs < 10.0, fmt("runtime %.2f s (< 10 s)", secs));
  return v;
}

Verdict table3() {
  Verdict v;
  const auto rep = reproduce_table(TableId::T3);
  table_summary(v, rep);
  for (Family f : {Family::M3, Family::M4}) {
    const double x = rep.cell(f, 1, "p_stop").repro;
    v.check(std::abs(x - 1.0) <= 0.01, fmt("%s s=1 p_stop %.4f vs 1.00 +- 0.01", std::string(to_string(f)).c_str(), x));
  }
  const double lo = rep.cell(Family::M1bar, 3, "p_true_given_stop").repro;
  v.check(std::abs(lo - 0.70) <= kTableTolerance, fmt("M1bar s=3 accuracy %.4f vs 0.70", lo));
  const auto& mp = rep.result.method(Family::MP);
  const int k = first_reaching(mp, 0.5);
  v.check(k >= 0 && mp.p_true_given_stop(k) >= 0.94,
          fmt("MP accuracy %.4f at first p_stop >= 0.5 (s=%d)", k >= 0 ? mp.p_true_given_stop(k) : 0.0, k + 1));
  return v;
}

Verdict table4() {
  Verdict v;
  const auto rep = reproduce_table(TableId::T4);
  table_summary(v, rep);
  const auto& mp = rep.result.method(Family::MP);
  const auto& m1 = rep.result.method(Family::M1);
  const int kmp = first_reaching(mp, 0.5);
  const int km1 = first_reaching(m1, 0.5);
  v.check(kmp >= 0 && km1 >= 0 && kmp + 1 == km1, fmt("p_stop >= 0.5 first at s=%d (MP) and s=%d (M1)", kmp + 1, km1 + 1));
  v.check(kmp >= 0 && mp.p_true_given_stop(kmp) >= 0.98,
          fmt("MP accuracy there %.4f (>= 0.98)", kmp >= 0 ? mp.p_true_given_stop(kmp) : 0.0));
  return v;
}

// Single positive channel: evidence [eps, 1, 1] with ln eps ~ N(mu, c^2).
Verdict analytic_bounds() {
  Verdict v;
  const std::vector<double> prior{0.5, 0.3, 0.2};
  const double mu = 0.8;
  const double c = 0.6;
  const int trials = 100000;
  const int S = 20;
  const std::vector<double> taus{0.7, 0.8, 0.9};
  const std::vector<Family> fams{Family::M1, Family::MP};

  // hits[f][t][s-1]: trials whose state after s updates is inside the region with the true class on top.
  std::vector<std::vector<std::vector<int>>> hits(fams.size(), std::vector<std::vector<int>>(taus.size(), std::vector<int>(S, 0)));
  std::vector<std::vector<StoppingRule>> rules(fams.size());
  for (std::size_t f = 0; f < fams.size(); ++f) {
    for (double t : taus) rules[f].push_back(calibrate(fams[f], t, 3));
  }
  Rng rng(substream_seed(kDefaultSeed, 0, 99));
  for (int t = 0; t < trials; ++t) {
    SimplexPoint p = P(prior);
    for (int s = 1; s <= S; ++s) {
      p = oplus(p, LikelihoodVector({rng.lognormal(mu, c), 1.0, 1.0}));
      if (p.argmax() != 0) continue;
      for (std::size_t f = 0; f < fams.size(); ++f) {
        for (std::size_t ti = 0; ti < taus.size(); ++ti) hits[f][ti][s - 1] += should_stop(rules[f][ti], p);
      }
    }
  }
  double worst = 0.0;
  std::string where;
  for (std::size_t f = 0; f < fams.size(); ++f) {
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
      for (int s = 1; s <= S; ++s) {
        BoundQuery q{P(prior), 0, 1, taus[ti], mu, c, s, fams[f] == Family::M1 ? BoundRule::M1 : BoundRule::MP};
        const double d = std::abs(stop_probability_lognormal(q) - static_cast<double>(hits[f][ti][s - 1]) / trials);
        if (d > worst) {
          worst = d;
          where = fmt("%s tau=%.1f s=%d", std::string(to_string(fams[f])).c_str(), taus[ti], s);
        }
      }
    }
  }
  v.check(worst <= 0.01, fmt("analytic vs MC (1e5 trials, M1 and MP, s=1..20): max |diff| %.4f at %s", worst, where.c_str()));

  std::vector<int> svals(S);
  for (int s = 0; s < S; ++s) svals[s] = s + 1;
  int tp_bad = 0;
  int fa_bad = 0;
  std::string fa_where;
  for (double tau : taus) {
    const BoundQuery q{P(prior), 0, 1, tau, mu, c, 1, BoundRule::M1};
    for (const auto& x : verify_stop_ordering(q, svals).violations) {
      if (x.relation.rfind("TP", 0) == 0) {
        ++tp_bad;
      } else {
        if (fa_bad++ == 0) fa_where = fmt(" (first: tau=%.1f s=%d %s, %.3g vs %.3g)", tau, x.s, x.relation.c_str(), x.lhs, x.rhs);
      }
    }
  }
  const int points = static_cast<int>(taus.size()) * S;
  v.check(tp_bad == 0, fmt("TP(MP) >= TP(M1): %d/%d grid points violate", tp_bad, points));
  v.check(fa_bad == 0, fmt("FA(M1) <= FA(MP) <= FA(M1bar): %d/%d grid-point violations%s", fa_bad, points, fa_where.c_str()));
  return v;
}

// ---------------------------------------------------------------------------
// Geometry

struct Tally {
  long cases = 0;
  long bad = 0;
  double worst = 0.0;
  void add(double err, double tol) {
    ++cases;
    worst = std::max(worst, err);
    if (!(err <= tol)) ++bad;
  }
};

double max_abs_diff(const SimplexPoint& a, const SimplexPoint& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Random point that is sometimes diffuse and sometimes sharply peaked.
SimplexPoint random_point(std::mt19937_64& g, std::size_t n) {
  std::exponential_distribution<double> ex(1.0);
  std::uniform_real_distribution<double> gamma(1.0, 8.0);
  const double k = gamma(g);
  std::vector<double> x(n);
  for (auto& v : x) v = std::pow(ex(g), k) + 1e-12;
  return SimplexPoint::closure(std::move(x));
}

// Largest t in [lo, hi] with stops(t) false, given stops(lo) false and stops(hi) true.
double bisect_flip(const std::function<bool(double)>& stops, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (stops(mid) ? hi : lo) = mid;
  }
  return lo;
}

SimplexPoint on_ray(std::size_t n, std::size_t i, double t) {
  std::vector<double> v(n, (1.0 - t) / static_cast<double>(n));
  v[i] += t;
  return SimplexPoint::closure(std::move(v));
}

SimplexPoint on_edge(std::size_t n, std::size_t i, std::size_t j, double t) {
  std::vector<double> v(n, 0.0);
  v[i] = t;
  v[j] = 1.0 - t;
  return SimplexPoint::from_probs(std::move(v));
}

Verdict geometry() {
  Verdict v;
  std::mt19937_64 g(kDefaultSeed);
  std::uniform_int_distribution<std::size_t> dim(3, 10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long N = 100000;

  Tally axioms;
  for (long k = 0; k < N; ++k) {
    const std::size_t n = dim(g);
    const auto p = random_point(g, n);
    const auto q = random_point(g, n);
    const auto r = random_point(g, n);
    const double a = -3.0 + 6.0 * unit(g);
    const double b = -3.0 + 6.0 * unit(g);
    double e = 0.0;
    e = std::max(e, max_abs_diff(oplus(p, q), oplus(q, p)));
    e = std::max(e, max_abs_diff(oplus(oplus(p, q), r), oplus(p, oplus(q, r))));
    e = std::max(e, max_abs_diff(oplus(p, uniform(n)), p));
    e = std::max(e, max_abs_diff(otimes(p, 1.0), p));
    e = std::max(e, max_abs_diff(otimes(p, 0.0), uniform(n)));
    e = std::max(e, max_abs_diff(otimes(otimes(p, a), b), otimes(p, a * b)));
    e = std::max(e, max_abs_diff(otimes(oplus(p, q), a), oplus(otimes(p, a), otimes(q, a))));
    e = std::max(e, max_abs_diff(otimes(p, a + b), oplus(otimes(p, a), otimes(p, b))));
    e = std::max(e, max_abs_diff(oplus(p, otimes(p, -1.0)), uniform(n)));
    axioms.add(e, 1e-10);
  }
  v.check(axioms.bad == 0, fmt("vector-space axioms: %ld cases, worst %.2e (tol 1e-10)", axioms.cases, axioms.worst));

  Tally flip;
  for (long k = 0; k < N; ++k) {
    const Family f = std::array{Family::M1, Family::M2, Family::M3, Family::M4}[k % 4];
    const std::size_t n = dim(g);
    const std::size_t i = g() % n;
    const double tau = 1.0 / n + 0.02 + (0.97 - 1.0 / n) * unit(g);
    const auto rule = calibrate(f, tau, n);
    const double t = bisect_flip([&](double x) { return should_stop(rule, on_ray(n, i, x)); }, 0.0, 1.0);
    flip.add(l2_distance(on_ray(n, i, t).probs(), v_point(n, tau, i).probs()), 1e-9);
  }
  v.check(flip.bad == 0, fmt("M1-M4 flip at v_n(tau) along u_n -> corner: %ld cases, worst %.2e (tol 1e-9)", flip.cases, flip.worst));

  long nest_bad = 0;
  long nest_cases = 0;
  long random_witnesses = 0;
  bool witnesses = true;
  for (std::size_t n : {3, 5, 10}) {
    for (double tau : {0.6, 0.8, 0.95}) {
      const double hv = shannon_entropy(v_point(n, tau));
      const auto m1 = calibrate(Family::M1, tau, n);
      const auto m3 = calibrate(Family::M3, tau, n);
      for (long k = 0; k < N / 9 + 1; ++k) {
        const auto p = random_point(g, n);
        ++nest_cases;
        if (p.max() >= tau && shannon_entropy(p) > hv + 1e-9) ++nest_bad;
        if (should_stop(m1, p) && !should_stop(m3, p)) ++nest_bad;
        if (shannon_entropy(p) < hv && p.max() < tau) ++random_witnesses;
      }
      const auto w = w_point(n, tau - 1e-3);
      witnesses = witnesses && shannon_entropy(w) < hv && w.max() < tau && should_stop(m3, w) && !should_stop(m1, w);
    }
  }
  v.check(nest_bad == 0 && witnesses,
          fmt("confidence region inside entropy region: %ld cases, %ld violations; strictness witnessed (%ld random witnesses)",
              nest_cases, nest_bad, random_witnesses));

  Tally inter;
  for (long k = 0; k < N / 4; ++k) {
    const std::size_t n = dim(g);
    const std::size_t i = g() % n;
    const std::size_t j = (i + 1 + g() % (n - 1)) % n;
    const double tau = 0.52 + 0.46 * unit(g);
    const auto m1 = calibrate(Family::M1, tau, n);
    const auto mp = calibrate(Family::MP, tau, n);
    const double t1 = bisect_flip([&](double x) { return should_stop(m1, on_edge(n, i, j, x)); }, 0.5, 1.0);
    const double t2 = bisect_flip([&](double x) { return should_stop(mp, on_edge(n, i, j, x)); }, 0.5, 1.0);
    std::vector<double> w(n, 0.0);
    w[i] = tau;
    w[j] = 1.0 - tau;
    inter.add(std::max(l2_distance(on_edge(n, i, j, t1).probs(), w), l2_distance(on_edge(n, i, j, t2).probs(), w)), 1e-9);
  }
  double top = 0.0;
  for (const auto& p : boundary_sample(calibrate(Family::MP, 0.8, 3), 4000)) top = std::max(top, p.max());
  v.check(inter.bad == 0 && top <= 0.8 + 1e-9 && top >= 0.8 - 1e-3,
          fmt("gap and confidence boundaries meet at w_n(tau): %ld cases, worst %.2e; max confidence on gap boundary %.6f",
              inter.cases, inter.worst, top));

  Tally psi;
  for (long k = 0; k < N / 4; ++k) {
    const std::size_t n = dim(g);
    const std::size_t i = g() % n;
    const double tau = 0.52 + 0.46 * unit(g);
    const auto mp = calibrate(Family::MP, tau, n);
    const double tau_bar = 2.0 - 2.0 * tau;
    const double expect = (1.0 + (n - 1.0) * (1.0 - tau_bar)) / n;
    const double t = bisect_flip([&](double x) { return should_stop(mp, on_ray(n, i, x)); }, 0.0, 1.0);
    psi.add(std::abs(on_ray(n, i, t)[i] - expect), 1e-9);
  }
  double lowest = 1.0;
  for (const auto& p : boundary_sample(calibrate(Family::MP, 0.8, 3), 4000)) lowest = std::min(lowest, p.max());
  const double psi3 = 2.2 / 3.0;
  v.check(psi.bad == 0 && lowest >= psi3 - 1e-9 && lowest <= psi3 + 1e-6,
          fmt("closest gap-boundary point is v_n(psi): %ld cases, worst %.2e; n=3 sampled min confidence %.9f vs %.9f",
              psi.cases, psi.worst, lowest, psi3));

  Tally line;
  for (long k = 0; k < N; ++k) {
    const std::size_t n = dim(g);
    const std::size_t i = g() % n;
    const auto p = random_point(g, n);
    const double kk = std::exp(-3.0 + 6.0 * unit(g));
    std::vector<double> e(n, 1.0);
    e[i] = kk;
    const auto q = oplus(p, LikelihoodVector(e));
    const double lambda = 1.0 / (kk * p[i] + 1.0 - p[i]);
    double err = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double c = m == i ? 1.0 : 0.0;
      err = std::max(err, std::abs((q[m] - c) - lambda * (p[m] - c)));
    }
    line.add(err, 1e-9);
  }
  v.check(line.bad == 0, fmt("single-class update stays on the line to the corner: %ld cases, worst %.2e (tol 1e-9)",
                             line.cases, line.worst));

  Tally proj;
  std::uniform_int_distribution<std::size_t> small(3, 6);
  for (long k = 0; k < N; ++k) {
    const std::size_t n = small(g);
    const std::size_t i = g() % n;
    const auto p = random_point(g, n);
    const std::vector<double> raw(p.probs().begin(), p.probs().end());
    const auto grid = oracle::grid_projection(raw, i);
    const auto mine = project_to_center_line(p, i);
    // The grid lands within its spacing of the exact projection and never gets closer to p.
    const double slack = l2_distance(raw, mine.probs()) - l2_distance(raw, grid);
    proj.add(slack > 1e-12 ? 1.0 : l2_distance(mine.probs(), grid), 1e-4);
  }
  v.check(proj.bad == 0, fmt("center-line projection vs 1e-4 grid: %ld cases, worst gap %.2e", proj.cases, proj.worst));

  Tally d2;
  for (long k = 0; k < N; ++k) {
    const std::size_t n = 2 + g() % 9;
    const auto p = random_point(g, n);
    d2.add(std::abs(delta2_divergence(p, corner(n, p.argmax())) - (1.0 - p.max())), 1e-12);
  }
  v.check(d2.bad == 0, fmt("divergence to nearest corner equals 1 - max: %ld cases, worst %.2e (tol 1e-12)", d2.cases, d2.worst));
  return v;
}

// ---------------------------------------------------------------------------

Verdict constant_evidence() {
  Verdict v;
  const std::vector<double> p1s{0.2, 0.3, 0.45, 0.55, 0.62};
  const std::vector<std::pair<double, double>> tau_eps{{0.7, 1.6}, {0.8, 2.0}, {0.9, 1.35}, {0.95, 3.1}};
  int cases = 0;
  int bad = 0;
  for (double p1 : p1s) {
    for (auto [tau, eps] : tau_eps) {
      const std::vector<double> prior{p1, (1.0 - p1) * 0.6, (1.0 - p1) * 0.4};
      for (Family f : {Family::M1, Family::MP}) {
        BoundQuery q{P(prior), 0, 1, tau, 0.0, 1.0, 1, f == Family::M1 ? BoundRule::M1 : BoundRule::MP};
        // Keep the threshold away from an integer so floating rounding cannot decide the case.
        double e = eps;
        while (std::abs(min_sequences_constant_evidence(q, e) - std::round(min_sequences_constant_evidence(q, e))) < 1e-6) {
          e *= 1.01;
        }
        const int expect = first_stop_sequence(min_sequences_constant_evidence(q, e));
        const EvidenceModel m{std::log(e), 0.0, 0.0, 0.0};
        const auto out = run_trial(TrialConfig{P(prior), 0, calibrate(f, tau, 3), Broadcast{}, m, 1000, 1});
        const double g = 2.0 * tau - 1.0;
        const int lin = oracle::first_stop_linear(prior, 0, e, [&](const std::vector<double>& p) {
          if (f == Family::M1) return p[0] > tau;
          return p[0] - std::max(p[1], p[2]) > g;
        });
        ++cases;
        const bool ok = out.stopped_at && *out.stopped_at == expect && lin == expect;
        if (!ok) {
          ++bad;
          v.notes.push_back(fmt("       %s p1=%.2f tau=%.2f eps=%.3f: engine %d, closed form %d, linear %d",
                                std::string(to_string(f)).c_str(), p1, tau, e, out.stopped_at ? *out.stopped_at : -1,
                                expect, lin));
        }
      }
    }
  }
  v.check(bad == 0, fmt("%d of %d (prior, tau, eps, rule) cases stop exactly where the closed form says", cases - bad, cases));
  return v;
}

Verdict letters() {
  Verdict v;
  const double a = letters_projection(0.90, 15.44);
  const double b = letters_projection(0.85, 13.08);
  const double lit = letters_projection(0.90, 15.44, 100, true);
  v.check(std::abs(a - 1735.0) / 1735.0 <= 0.05, fmt("acc 0.90, 15.44 seq/letter: %.2f vs 1735 (%.2f%%)", a, 100 * (a / 1735.0 - 1)));
  v.check(std::abs(b - 1580.0) / 1580.0 <= 0.05, fmt("acc 0.85, 13.08 seq/letter: %.2f vs 1580 (%.2f%%)", b, 100 * (b / 1580.0 - 1)));
  v.check(std::abs(lit - 169.84) < 1e-9, fmt("literal reading: %.2f (expected 169.84)", lit));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rbc_stoplab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::streambuf* saved = std::cout.rdbuf();
  std::ostringstream sink;
  std::cout.rdbuf(sink.rdbuf());
  const int rc = run_command(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(saved);
  return rc;
}

Verdict determinism() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "rbc_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::string>> runs{{"1", "a"}, {"1", "b"}, {"8", "c"}, {"3", "d"}};
  for (const auto& [threads, dir] : runs) {
    const int rc = cli({"--threads", threads, "--out-dir", (root / dir).string(), "table", "T2"});
    v.check(rc == 0 || rc == 1, fmt("table T2 with %s worker(s) ran (exit %d)", threads.c_str(), rc));
  }
  for (const char* f : {"T2_p_stop.csv", "T2_p_true_given_stop.csv", "T2_summary.csv", "comparison_T2.csv"}) {
    const auto ref = slurp(root / "a" / f);
    bool same = !ref.empty();
    for (const char* d : {"b", "c", "d"}) same = same && slurp(root / d / f) == ref;
    v.check(same, fmt("%s byte-identical across runs and worker counts", f));
  }
  fs::remove_all(root);
  return v;
}

}  // namespace

int main() {
  struct Item {
    const char* name;
    Verdict (*run)();
  };
  const Item items[] = {
      {"1 Table 2 reproduction", table2},
      {"2 Table 3 reproduction", table3},
      {"3 Table 4 reproduction", table4},
      {"4 Analytic stopping probabilities vs Monte Carlo, and TP/FA orderings", analytic_bounds},
      {"5 Geometry property suite", geometry},
      {"6 Constant-evidence exactness", constant_evidence},
      {"7 Typing-time projection", letters},
      {"8 Determinism of table output", determinism},
  };
  int failed = 0;
  for (const auto& it : items) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it.run();
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << it.name << fmt("  (%.1f s)", seconds_since(t0)) << '\n';
    for (const auto& n : v.notes) std::cout << "       " << n << '\n';
    std::cout.flush();
    failed += !v.pass;
  }
  std::cout << (sizeof items / sizeof items[0]) - failed << '/' << sizeof items / sizeof items[0] << " criteria pass\n";
  return failed == 0 ? 0 : 1;
}
