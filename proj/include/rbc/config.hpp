// Flat key=value run configuration. '#' starts a comment; blank lines are ignored.
// Every error carries the line number and the offending key.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rbc/io.hpp"
#include "rbc/montecarlo.hpp"

namespace rbc {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& key, const std::string& msg)
      : std::runtime_error(source + ":" + std::to_string(line) + ": key '" + key + "': " + msg),
        line_(line),
        key_(key) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::string out_dir = "out";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  s = trim(s);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline constexpr std::string_view kConfigKeys[] = {"n",     "prior",  "true_index", "tau",       "methods",
                                                   "mu_pos", "c_pos", "mu_neg",     "c_neg",     "scheme",
                                                   "trials", "max_sequences", "seed", "out_dir"};

/// Parses a configuration document. Missing keys keep RunConfig defaults; the
/// prior is required.
inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  RunConfig rc;
  ExperimentConfig& c = rc.experiment;
  c.master_seed = kDefaultSeed;
  c.model = {0.6, 0.5, 0.0, 0.5};
  std::map<std::string, int> seen;
  std::optional<std::size_t> n_given;
  std::optional<std::size_t> topn;
  bool have_prior = false;

  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(source, lineno, std::string(line), "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view val = detail::trim(line.substr(eq + 1));
    auto fail = [&](const std::string& msg) { throw ConfigError(source, lineno, key, msg); };
    if (std::find(std::begin(kConfigKeys), std::end(kConfigKeys), key) == std::end(kConfigKeys)) fail("unknown key");
    if (seen.count(key)) fail("duplicate key (first set on line " + std::to_string(seen[key]) + ")");
    seen[key] = lineno;
    if (val.empty()) fail("empty value");

    auto real = [&](bool nonneg) {
      const auto v = detail::parse_real(val);
      if (!v) fail("not a real number: '" + std::string(val) + "'");
      if (nonneg && *v < 0.0) fail("must be >= 0");
      return *v;
    };
    auto count = [&](long lo) {
      const auto v = detail::parse_int<long>(val);
      if (!v) fail("not an integer: '" + std::string(val) + "'");
      if (*v < lo) fail("must be >= " + std::to_string(lo));
      return *v;
    };

    if (key == "n") {
      n_given = static_cast<std::size_t>(count(2));
    } else if (key == "prior") {
      have_prior = true;
      constexpr std::string_view rr = "random_remainder:";
      if (val.substr(0, rr.size()) == rr) {
        const auto m = detail::parse_real(val.substr(rr.size()));
        if (!m || !(*m > 0.0 && *m < 1.0)) fail("random_remainder mass must be a real in (0, 1)");
        c.prior = PriorSpec::random_remainder(*m);
      } else {
        std::vector<double> p;
        for (auto tok : detail::split(val, ',')) {
          const auto v = detail::parse_real(tok);
          if (!v || *v < 0.0) fail("prior entries must be non-negative reals, got '" + std::string(tok) + "'");
          p.push_back(*v);
        }
        if (p.size() < 2) fail("prior needs at least two entries");
        double sum = 0.0;
        for (double x : p) sum += x;
        if (std::abs(sum - 1.0) > 1e-9) fail("prior sums to " + format_real(sum) + ", not 1");
        c.prior = PriorSpec::fixed(std::move(p));
      }
    } else if (key == "true_index") {
      c.true_index = static_cast<std::size_t>(count(0));
    } else if (key == "tau") {
      c.tau = real(false);
    } else if (key == "methods") {
      c.methods.clear();
      for (auto tok : detail::split(val, ',')) {
        const auto f = parse_family(tok);
        if (!f) fail("unknown method '" + std::string(tok) + "' (expected M1,M2,M3,M4,M5,MP,M1bar)");
        if (std::find(c.methods.begin(), c.methods.end(), *f) != c.methods.end()) {
          fail("method listed twice: " + std::string(tok));
        }
        c.methods.push_back(*f);
      }
    } else if (key == "mu_pos") {
      c.model.mu_pos = real(false);
    } else if (key == "c_pos") {
      c.model.c_pos = real(true);
    } else if (key == "mu_neg") {
      c.model.mu_neg = real(false);
    } else if (key == "c_neg") {
      c.model.c_neg = real(true);
    } else if (key == "scheme") {
      if (val == "broadcast") {
        c.scheme = Broadcast{};
      } else if (val.substr(0, 5) == "topN:") {
        const auto v = detail::parse_int<long>(val.substr(5));
        if (!v || *v < 1) fail("topN needs a positive integer, got '" + std::string(val) + "'");
        topn = static_cast<std::size_t>(*v);
        c.scheme = TopN{*topn};
      } else {
        fail("expected 'broadcast' or 'topN:<N>', got '" + std::string(val) + "'");
      }
    } else if (key == "trials") {
      c.n_trials = static_cast<int>(count(1));
    } else if (key == "max_sequences") {
      c.max_sequences = static_cast<int>(count(1));
    } else if (key == "seed") {
      const auto v = detail::parse_int<std::uint64_t>(val);
      if (!v) fail("not an unsigned 64-bit integer: '" + std::string(val) + "'");
      c.master_seed = *v;
    } else if (key == "out_dir") {
      rc.out_dir = std::string(val);
    }
  }

  // Cross-key checks report at the line of the key that breaks them.
  auto at = [&](const std::string& key, const std::string& msg) {
    throw ConfigError(source, seen.count(key) ? seen[key] : 0, key, msg);
  };
  if (!have_prior) at("prior", "missing required key");
  if (!c.prior.random_true_mass) {
    if (n_given && *n_given != c.prior.probs.size()) {
      at("prior", "has " + std::to_string(c.prior.probs.size()) + " entries but n = " + std::to_string(*n_given));
    }
    c.n = c.prior.probs.size();
  } else {
    if (!n_given) at("n", "required with a random_remainder prior");
    c.n = *n_given;
  }
  if (c.true_index >= c.n) at("true_index", "must be < n = " + std::to_string(c.n));
  if (!(c.tau > 1.0 / static_cast<double>(c.n) && c.tau <= 1.0)) at("tau", "must lie in (1/n, 1]");
  if (topn && *topn > c.n) at("scheme", "topN must not exceed n = " + std::to_string(c.n));
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "<file>", "cannot open file");
  return parse_config(in, path);
}

/// The fully resolved configuration in the same key=value format.
inline std::string to_manifest(const RunConfig& rc) {
  const ExperimentConfig& c = rc.experiment;
  std::ostringstream os;
  os << "n = " << c.n << '\n';
  os << "prior = ";
  if (c.prior.random_true_mass) {
    os << "random_remainder:" << format_real(*c.prior.random_true_mass);
  } else {
    for (std::size_t i = 0; i < c.prior.probs.size(); ++i) os << (i ? "," : "") << format_real(c.prior.probs[i]);
  }
  os << '\n';
  os << "true_index = " << c.true_index << '\n';
  os << "tau = " << format_real(c.tau) << '\n';
  os << "methods = ";
  for (std::size_t i = 0; i < c.methods.size(); ++i) os << (i ? "," : "") << to_string(c.methods[i]);
  os << '\n';
  os << "mu_pos = " << format_real(c.model.mu_pos) << '\n';
  os << "c_pos = " << format_real(c.model.c_pos) << '\n';
  os << "mu_neg = " << format_real(c.model.mu_neg) << '\n';
  os << "c_neg = " << format_real(c.model.c_neg) << '\n';
  if (const auto* t = std::get_if<TopN>(&c.scheme)) os << "scheme = topN:" << t->N << '\n';
  else os << "scheme = broadcast\n";
  os << "trials = " << c.n_trials << '\n';
  os << "max_sequences = " << c.max_sequences << '\n';
  os << "seed = " << c.master_seed << '\n';
  os << "out_dir = " << rc.out_dir << '\n';
  return os.str();
}

}  // namespace rbc
