// CSV serialization of experiment results and table comparisons.
// Reals are printed with 17 significant digits so they read back exactly.
#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbc/montecarlo.hpp"

namespace rbc {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

enum class Metric { PStop, PTrueGivenStop };

/// header `method,s1,...,sK`; column sk is the state after k updates, prior stops included.
inline void write_matrix(std::ostream& os, const ExperimentResult& r, Metric metric) {
  const int K = r.config.max_sequences;
  os << "method";
  for (int k = 1; k <= K; ++k) os << ",s" << k;
  os << '\n';
  for (const auto& m : r.methods) {
    os << to_string(m.family);
    for (int k = 1; k <= K; ++k) os << ',' << format_real(metric == Metric::PStop ? m.p_stop(k) : m.p_true_given_stop(k));
    os << '\n';
  }
}

/// Per-method scalars, including the prior-only stop count the matrices fold into s1.
inline void write_summary(std::ostream& os, const ExperimentResult& r) {
  os << "method,n_trials,stopped_on_prior,correct_on_prior,mean_sequences,accuracy,censored\n";
  for (const auto& m : r.methods) {
    os << to_string(m.family) << ',' << m.n_trials << ',' << m.stopped_by[0] << ',' << m.correct_by[0] << ','
       << format_real(m.mean_sequences()) << ',' << format_real(m.accuracy()) << ',' << m.censored() << '\n';
  }
}

struct MatrixRow {
  std::string method;
  std::vector<double> values;
};

inline std::vector<MatrixRow> read_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_matrix: empty input");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "method") throw std::runtime_error("read_matrix: bad header");
  std::vector<MatrixRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw std::runtime_error("read_matrix: ragged row");
    MatrixRow r{f[0], {}};
    for (std::size_t i = 1; i < f.size(); ++i) r.values.push_back(std::stod(f[i]));
    rows.push_back(std::move(r));
  }
  return rows;
}

/**
 * Rebuilds the aggregate counts of a result from its two matrices and summary;
 * tau and n re-derive the calibrated rules.
 * Per-trial records are not stored in CSV and come back empty.
 */
inline std::vector<MethodResult> read_result(std::istream& p_stop, std::istream& p_true, std::istream& summary,
                                             double tau, std::size_t n) {
  const auto ps = read_matrix(p_stop);
  const auto pt = read_matrix(p_true);
  if (ps.size() != pt.size()) throw std::runtime_error("read_result: matrices disagree");
  std::string line;
  std::getline(summary, line);
  std::vector<MethodResult> out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!std::getline(summary, line)) throw std::runtime_error("read_result: summary too short");
    const auto f = split_csv_line(line);
    if (f.size() < 4 || f[0] != ps[i].method || pt[i].method != ps[i].method) {
      throw std::runtime_error("read_result: method order differs");
    }
    const auto fam = parse_family(f[0]);
    if (!fam) throw std::runtime_error("read_result: unknown method " + f[0]);
    MethodResult m{*fam, calibrate(*fam, tau, n)};
    m.n_trials = std::stoi(f[1]);
    m.stopped_by.push_back(std::stoi(f[2]));
    m.correct_by.push_back(std::stoi(f[3]));
    for (std::size_t k = 0; k < ps[i].values.size(); ++k) {
      const int stopped = static_cast<int>(std::lround(ps[i].values[k] * m.n_trials));
      m.stopped_by.push_back(stopped);
      m.correct_by.push_back(static_cast<int>(std::lround(pt[i].values[k] * stopped)));
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline void write_comparison(std::ostream& os, const TableReport& rep) {
  os << "table,method,sequence,metric,paper,repro,abs_delta,pass\n";
  for (const auto& c : rep.cells) {
    os << c.table << ',' << to_string(c.method) << ',' << c.sequence << ',' << c.metric << ','
       << format_real(c.published) << ',' << format_real(c.repro) << ',' << format_real(c.abs_delta) << ','
       << (c.pass ? "true" : "false") << '\n';
  }
}

inline void write_sweep(std::ostream& os, const std::vector<SweepPoint>& pts) {
  os << "method,tau,mean_sequences,accuracy\n";
  for (const auto& p : pts) {
    os << to_string(p.family) << ',' << format_real(p.tau) << ',' << format_real(p.mean_sequences) << ','
       << format_real(p.accuracy) << '\n';
  }
}

/// Long format: one row per point, `prior,trajectory,sequence,p0,...`; trajectory "mean" holds the average.
inline void write_trajectories(std::ostream& os, const std::vector<TrajectoryEnsemble>& ens) {
  const std::size_t n = ens.empty() ? 0 : ens.front().prior.size();
  os << "prior,trajectory,sequence";
  for (std::size_t i = 0; i < n; ++i) os << ",p" << i;
  os << '\n';
  for (std::size_t e = 0; e < ens.size(); ++e) {
    for (std::size_t t = 0; t < ens[e].trajectories.size(); ++t) {
      const auto& path = ens[e].trajectories[t];
      for (std::size_t s = 0; s < path.size(); ++s) {
        os << e << ',' << t << ',' << s;
        for (double v : path[s].probs()) os << ',' << format_real(v);
        os << '\n';
      }
    }
    for (std::size_t s = 0; s < ens[e].mean.size(); ++s) {
      os << e << ",mean," << s;
      for (double v : ens[e].mean[s]) os << ',' << format_real(v);
      os << '\n';
    }
  }
}

inline void write_points(std::ostream& os, const std::vector<SimplexPoint>& pts) {
  const std::size_t n = pts.empty() ? 3 : pts.front().size();
  for (std::size_t i = 0; i < n; ++i) os << (i ? ",p" : "p") << i;
  os << '\n';
  for (const auto& p : pts) {
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << format_real(p[i]);
    os << '\n';
  }
}

}  // namespace rbc
