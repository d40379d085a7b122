// Command-line front end: experiments, table comparison, bounds, boundaries,
// typing projections and trajectory ensembles. All outputs are CSV.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rbc/cli.hpp"
#include "rbc/rbc.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;

struct Outputs {
  fs::path dir;

  explicit Outputs(const std::string& d) : dir(d) { fs::create_directories(dir); }

  template <class Writer>
  fs::path write(const std::string& name, Writer&& w) const {
    const fs::path p = dir / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    w(os);
    if (!os) throw std::runtime_error("write failed: " + p.string());
    return p;
  }
};

void write_result(const Outputs& out, const rbc::ExperimentResult& r, const std::string& prefix = "") {
  out.write(prefix + "p_stop.csv", [&](std::ostream& os) { rbc::write_matrix(os, r, rbc::Metric::PStop); });
  out.write(prefix + "p_true_given_stop.csv",
            [&](std::ostream& os) { rbc::write_matrix(os, r, rbc::Metric::PTrueGivenStop); });
  out.write(prefix + "summary.csv", [&](std::ostream& os) { rbc::write_summary(os, r); });
}

void write_manifest(const Outputs& out, const rbc::RunConfig& rc, const std::string& command) {
  out.write("manifest.cfg", [&](std::ostream& os) {
    os << "# command: " << command << '\n';
    os << rbc::to_manifest(rc);
  });
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  for (auto tok : rbc::detail::split(s, ',')) {
    const auto v = rbc::detail::parse_real(tok);
    if (!v) throw CLI::ValidationError(what, "not a real number: '" + std::string(tok) + "'");
    out.push_back(*v);
  }
  return out;
}

// "a:b" or a comma list of integers.
std::vector<int> parse_range(const std::string& s) {
  std::vector<int> out;
  if (const auto colon = s.find(':'); colon != std::string::npos) {
    const auto a = rbc::detail::parse_int<int>(s.substr(0, colon));
    const auto b = rbc::detail::parse_int<int>(s.substr(colon + 1));
    if (!a || !b || *a < 1 || *b < *a) throw CLI::ValidationError("--s-range", "expected lo:hi with 1 <= lo <= hi");
    for (int k = *a; k <= *b; ++k) out.push_back(k);
    return out;
  }
  for (auto tok : rbc::detail::split(s, ',')) {
    const auto v = rbc::detail::parse_int<int>(tok);
    if (!v || *v < 1) throw CLI::ValidationError("--s-range", "sequence counts must be positive integers");
    out.push_back(*v);
  }
  return out;
}

std::string format_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

namespace rbc {

int run_command(int argc, char** argv) {
  CLI::App app{"Recursive Bayesian classification stopping-rule laboratory"};
  app.require_subcommand(1);
  std::string out_override;
  unsigned threads = 0;
  app.add_option("--out-dir", out_override, "Output directory (overrides the config's out_dir)");
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)");

  std::string config_path;

  auto* simulate = app.add_subcommand("simulate", "Run the experiment described by a config file");
  simulate->add_option("config", config_path, "Config file")->required();

  std::string table_id;
  std::uint64_t table_seed = rbc::kDefaultSeed;
  auto* table = app.add_subcommand("table", "Reproduce a reference table and compare cell by cell");
  table->add_option("id", table_id, "T2, T3 or T4")->required()->check(CLI::IsMember({"T2", "T3", "T4"}));
  table->add_option("--seed", table_seed, "Master seed");

  std::string tau_list;
  bool sweep_m5 = false;
  auto* sweep = app.add_subcommand("sweep", "Mean sequences and accuracy per method over a tau grid");
  sweep->add_option("config", config_path, "Config file")->required();
  sweep->add_option("--tau-list", tau_list, "Comma-separated tau values")->required();
  sweep->add_flag("--include-m5", sweep_m5, "Keep M5 in the sweep");

  std::string s_range = "1:20";
  auto* bounds = app.add_subcommand("bounds", "Analytic stop and false-stop probabilities");
  bounds->add_option("config", config_path, "Config file")->required();
  bounds->add_option("--s-range", s_range, "lo:hi or a comma list")->required();

  std::string method;
  double tau = 0.8;
  std::size_t resolution = 200;
  auto* boundary = app.add_subcommand("boundary", "Sample a stopping boundary on the 3-class simplex");
  boundary->add_option("method", method, "M1, M2, M3, M4, MP or M1bar")->required();
  boundary->add_option("--tau", tau, "Calibration level")->required();
  boundary->add_option("--resolution", resolution, "Number of rays")->required()->check(CLI::PositiveNumber);

  double acc = 0.0;
  double eseq = 0.0;
  int letters_total = 100;
  bool literal = false;
  auto* letters = app.add_subcommand("letters", "Expected sequences to type a phrase");
  letters->add_option("--acc", acc, "Per-letter accuracy in (0, 1]")->required();
  letters->add_option("--eseq", eseq, "Expected sequences per letter")->required();
  letters->add_option("--total", letters_total, "Letters to type");
  letters->add_flag("--literal-pseudocode", literal, "Charge letters remaining after each round");

  int traj_count = 100;
  int traj_length = 20;
  auto* traj = app.add_subcommand("trajectories", "Posterior trajectory ensembles and their mean");
  traj->add_option("config", config_path, "Config file")->required();
  traj->add_option("--count", traj_count, "Trajectories per prior")->check(CLI::PositiveNumber);
  traj->add_option("--length", traj_length, "Sequences per trajectory")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  std::string command;
  for (int i = 1; i < argc; ++i) command += (i > 1 ? " " : "") + std::string(argv[i]);

  try {
    auto load = [&] {
      if (!fs::exists(config_path)) throw rbc::ConfigError(config_path, 0, "<file>", "no such file");
      rbc::RunConfig rc = rbc::load_config(config_path);
      if (!out_override.empty()) rc.out_dir = out_override;
      rc.experiment.threads = threads;
      return rc;
    };

    if (*simulate) {
      const auto rc = load();
      const auto res = rbc::run_experiment(rc.experiment);
      Outputs out(rc.out_dir);
      write_result(out, res);
      write_manifest(out, rc, command);
      for (const auto& m : res.methods) {
        std::cout << rbc::to_string(m.family) << ": mean_sequences=" << format_short(m.mean_sequences())
                  << " accuracy=" << format_short(m.accuracy()) << " censored=" << m.censored() << '\n';
      }
      return 0;
    }

    if (*table) {
      const auto id = *rbc::parse_table(table_id);
      rbc::GoldenTable g = rbc::golden_table(id, table_seed);
      g.config.threads = threads;
      const auto rep = rbc::compare_to_golden(g, rbc::run_experiment(g.config));
      rbc::RunConfig rc{g.config, out_override.empty() ? "out" : out_override};
      Outputs out(rc.out_dir);
      write_result(out, rep.result, table_id + "_");
      out.write("comparison_" + table_id + ".csv", [&](std::ostream& os) { rbc::write_comparison(os, rep); });
      write_manifest(out, rc, command);
      std::cout << table_id << ": " << rep.cells.size() - rep.failures() << "/" << rep.cells.size()
                << " cells within " << rbc::kTableTolerance << '\n';
      for (const auto& c : rep.cells) {
        if (!c.pass) {
          std::cout << "  off: " << rbc::to_string(c.method) << " col " << c.sequence << ' ' << c.metric
                    << " published=" << format_short(c.published) << " repro=" << format_short(c.repro) << '\n';
        }
      }
      return rep.all_pass() ? 0 : 1;
    }

    if (*sweep) {
      const auto rc = load();
      const auto taus = parse_list(tau_list, "--tau-list");
      const auto pts = rbc::speed_accuracy_sweep(rc.experiment, taus, sweep_m5);
      Outputs out(rc.out_dir);
      out.write("sweep.csv", [&](std::ostream& os) { rbc::write_sweep(os, pts); });
      write_manifest(out, rc, command);
      for (const auto& p : pts) {
        std::cout << rbc::to_string(p.family) << " tau=" << format_short(p.tau)
                  << " mean_sequences=" << format_short(p.mean_sequences) << " accuracy=" << format_short(p.accuracy)
                  << '\n';
      }
      return 0;
    }

    if (*bounds) {
      const auto rc = load();
      const auto& c = rc.experiment;
      if (c.prior.random_true_mass) throw CLI::ValidationError("prior", "bounds need an explicit prior");
      const auto prior = rbc::SimplexPoint::from_probs(c.prior.probs);
      // The competitor is the strongest non-true class.
      std::size_t comp = c.true_index == 0 ? 1 : 0;
      for (std::size_t i = 0; i < prior.size(); ++i) {
        if (i != c.true_index && prior[i] > prior[comp]) comp = i;
      }
      rbc::BoundQuery q{prior, c.true_index, comp, c.tau, c.model.mu_pos, c.model.c_pos, 1, rbc::BoundRule::M1};
      const auto svals = parse_range(s_range);
      const auto rep = rbc::verify_stop_ordering(q, svals);
      const bool m2norm = c.tau > 0.5;
      Outputs out(rc.out_dir);
      out.write("bounds.csv", [&](std::ostream& os) {
        os << "s,tp_m1,tp_mp" << (m2norm ? ",tp_m2norm" : "") << ",fa_m1,fa_mp,fa_m1bar\n";
        for (std::size_t i = 0; i < svals.size(); ++i) {
          os << svals[i] << ',' << rbc::format_real(rep.tp_m1[i]) << ',' << rbc::format_real(rep.tp_mp[i]);
          if (m2norm) {
            rbc::BoundQuery q2 = q;
            q2.s = svals[i];
            q2.rule_kind = rbc::BoundRule::M2norm;
            os << ',' << rbc::format_real(rbc::stop_probability_lognormal(q2));
          }
          os << ',' << rbc::format_real(rep.fa_m1[i]) << ',' << rbc::format_real(rep.fa_mp[i]) << ','
             << rbc::format_real(rep.fa_m1bar[i]) << '\n';
        }
      });
      write_manifest(out, rc, command);
      if (rep.ok()) {
        std::cout << "orderings hold at every s\n";
      } else {
        for (const auto& v : rep.violations) {
          std::cout << "violated at s=" << v.s << ": " << v.relation << " (" << rbc::format_real(v.lhs) << " vs "
                    << rbc::format_real(v.rhs) << ")\n";
        }
      }
      return 0;
    }

    if (*boundary) {
      const auto fam = rbc::parse_family(method);
      if (!fam) throw CLI::ValidationError("method", "unknown method '" + method + "'");
      if (*fam == rbc::Family::M5) throw CLI::ValidationError("method", "M5 has no static boundary");
      const auto rule = rbc::calibrate(*fam, tau, 3);
      const auto pts = rbc::boundary_sample(rule, resolution);
      Outputs out(out_override.empty() ? "out" : out_override);
      out.write("boundary_" + method + ".csv", [&](std::ostream& os) { rbc::write_points(os, pts); });
      std::cout << pts.size() << " boundary points, threshold " << rbc::format_real(rbc::threshold(rule)) << '\n';
      return 0;
    }

    if (*letters) {
      std::cout << format_short(rbc::letters_projection(acc, eseq, letters_total, literal)) << '\n';
      return 0;
    }

    if (*traj) {
      const auto rc = load();
      const auto& c = rc.experiment;
      rbc::Rng prior_rng(rbc::substream_seed(c.master_seed, 0, 1));
      const auto prior = c.prior.draw(c.n, c.true_index, prior_rng);
      rbc::EnsembleConfig ec{c.true_index, c.model, c.scheme, traj_count, traj_length, c.master_seed};
      const auto ens = rbc::trajectory_ensemble({prior}, ec);
      Outputs out(rc.out_dir);
      out.write("trajectories.csv", [&](std::ostream& os) { rbc::write_trajectories(os, ens); });
      write_manifest(out, rc, command);
      std::cout << ens.front().trajectories.size() << " trajectories of " << traj_length << " sequences\n";
      return 0;
    }
  } catch (const rbc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid value: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace rbc
