// seqmc: run samplers, exact oracle checks and the conditional-consistency
// counter-example from the command line.

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "seqmc/config.hpp"
#include "seqmc/error.hpp"
#include "seqmc/experiment.hpp"
#include "seqmc/oracle.hpp"

namespace {

using namespace seqmc;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kScorer = 3, kOracle = 4 };

struct CommonOptions {
  std::string config_path;
  std::string run_dir;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App& cmd, CommonOptions& opts) {
  cmd.add_option("--config", opts.config_path, "INI config file")->check(CLI::ExistingFile);
  cmd.add_option("--run-dir", opts.run_dir,
                 "write outputs exactly here instead of <output>/<timestamp>-<hash>");
  for (const auto& key : ConfigMap::known_keys()) {
    cmd.add_option_function<std::string>(
           "--" + key, [&opts, key](const std::string& v) { opts.overrides[key] = v; },
           "override " + key)
        ->group("Config overrides");
  }
}

// Precedence: defaults < config file < SEQMC_SEED < command-line overrides.
ConfigMap resolve_config(const CommonOptions& opts) {
  ConfigMap map;
  if (!opts.config_path.empty()) map.merge_file(opts.config_path);
  map.apply_environment();
  for (const auto& [key, value] : opts.overrides) map.set(key, value);
  return map;
}

std::filesystem::path run_directory(const CommonOptions& opts, const ExperimentConfig& config) {
  if (!opts.run_dir.empty()) return opts.run_dir;
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream name;
  name << std::put_time(&utc, "%Y%m%dT%H%M%SZ") << '-' << config.hash;
  return config.output_root / name.str();
}

void write_config(const ConfigMap& map, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.txt");
  out << map.canonical_text();
}

void print_warnings(const Report& report) {
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(6) << v;
  return out.str();
}

int cmd_sample(const CommonOptions& opts) {
  const auto map = resolve_config(opts);
  const auto config = map.to_experiment();
  const auto report = run_experiment(config);
  const auto dir = run_directory(opts, config);
  write_config(map, dir);
  write_run(report, config, dir);
  print_warnings(report);

  std::cout << "run_dir " << dir.string() << '\n'
            << "config_hash " << config.hash << '\n'
            << "acceptance_rate " << fmt(report.acceptance_rate.mean) << " +- "
            << fmt(report.acceptance_rate.stddev) << '\n'
            << "novel_rate " << fmt(report.novel_rate.mean) << " +- "
            << fmt(report.novel_rate.stddev) << '\n';
  if (report.oracle) {
    const auto& o = *report.oracle;
    if (o.empirical_tv) std::cout << "empirical_tv " << fmt(*o.empirical_tv) << '\n';
    if (o.stationary_tv) std::cout << "stationary_tv " << fmt(*o.stationary_tv) << '\n';
    if (o.balance_residual) std::cout << "balance_residual " << fmt(*o.balance_residual) << '\n';
    if (!o.within_tolerance) {
      std::cerr << "oracle tolerance violated\n";
      return kOracle;
    }
  }
  return kOk;
}

int cmd_oracle(const CommonOptions& opts, bool write_kernel) {
  const auto map = resolve_config(opts);
  const auto config = map.to_experiment();
  const auto& s = config.sampler;
  if (s.anneal || s.forced_accept_epochs > 0 ||
      (s.block && s.block->mode == BlockPolicy::Mode::annealed)) {
    throw Error(Errc::ConfigInvalid,
                "oracle needs a time-homogeneous kernel: no annealing, annealed blocks or forced "
                "acceptance");
  }
  const auto model = make_scorer(config.model);
  const std::size_t length = model->length();
  const std::size_t states =
      oracle::state_count(model->vocab().size(), length, oracle::kMaxKernelStates);

  const oracle::SamplerSpec spec{s.kind, s.energy, s.target_temp,
                                 s.block ? std::clamp<std::size_t>(s.block->fixed_size, 1, length) : 1};
  const auto target = oracle::enumerate_target(*model, s.energy, s.target_temp);
  const auto kernel = oracle::transition_kernel(*model, spec, s.proposal);
  const auto pi = oracle::stationary_distribution(kernel);
  const double tv = oracle::total_variation(pi, target.probs);
  const double residual = oracle::detailed_balance_residual(kernel, target.probs);

  const auto dir = run_directory(opts, config);
  write_config(map, dir);
  oracle::write_csv(dir / "target.csv", target.probs);
  oracle::write_csv(dir / "stationary.csv", pi);
  if (write_kernel) oracle::write_csv(dir / "kernel.csv", kernel.entries());

  std::cout << "run_dir " << dir.string() << '\n'
            << "states " << states << '\n'
            << "stationary_tv " << fmt(tv) << '\n'
            << "balance_residual " << fmt(residual) << '\n'
            << "max_row_defect " << fmt(kernel.max_row_defect()) << '\n';
  if (s.kind == SamplerKind::mh &&
      (tv > config.oracle.tv_tolerance || residual > config.oracle.balance_tolerance)) {
    std::cerr << "oracle tolerance violated (tv_tolerance " << config.oracle.tv_tolerance
              << ", balance_tolerance " << config.oracle.balance_tolerance << ")\n";
    return kOracle;
  }
  return kOk;
}

int cmd_compare(const CommonOptions& opts) {
  const auto base_map = resolve_config(opts);
  const auto base = base_map.to_experiment();
  const auto dir = run_directory(opts, base);
  write_config(base_map, dir);
  const auto model = make_scorer(base.model);

  struct Variant {
    const char* name;
    SamplerKind kind;
    EnergyKind energy;
  };
  constexpr Variant variants[] = {{"mh-raw", SamplerKind::mh, EnergyKind::raw},
                                  {"mh-norm", SamplerKind::mh, EnergyKind::norm},
                                  {"deg-gibbs", SamplerKind::degenerate_gibbs, EnergyKind::raw}};

  std::ofstream joined(dir / "compare.csv");
  joined << "# seqmc compare config_hash=" << base.hash << '\n'
         << "sampler," << kTraceColumns << '\n';
  std::cout << "run_dir " << dir.string() << '\n';
  for (const auto& v : variants) {
    auto config = base;
    config.sampler.kind = v.kind;
    config.sampler.energy = v.energy;
    config.sampler.track_both_energies = true;
    config.formats = {TraceFormat::csv};
    const auto report = run_experiment(config, *model);
    write_run(report, config, dir / v.name);
    print_warnings(report);

    std::ifstream in(dir / v.name / "trace.csv");
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    while (std::getline(in, line)) joined << v.name << ',' << line << '\n';

    std::cout << v.name << " acceptance_rate " << fmt(report.acceptance_rate.mean) << " novel_rate "
              << fmt(report.novel_rate.mean);
    if (!report.epochs.empty() && report.epochs.back().energy_raw) {
      std::cout << " final_energy_raw " << fmt(report.epochs.back().energy_raw->mean);
    }
    std::cout << '\n';
  }
  if (!joined) throw Error(Errc::IoFailure, "cannot write " + (dir / "compare.csv").string());
  return kOk;
}

oracle::ConditionalTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigInvalid, "cannot read table " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(Errc::ConfigInvalid, path + ": '" + cell + "' is not a number");
      }
    }
    rows.push_back(std::move(row));
  }
  return oracle::ConditionalTable(std::move(rows));
}

int cmd_counterexample(const std::string& x1_path, const std::string& x2_path) {
  if (x1_path.empty() != x2_path.empty()) {
    throw Error(Errc::ConfigInvalid, "give both --x1-given-x2 and --x2-given-x1, or neither");
  }
  double gap = 0.0;
  if (x1_path.empty()) {
    const oracle::ConditionalTable x1_given_x2({{0.99, 0.01}, {0.01, 0.99}});
    const oracle::ConditionalTable x2_given_x1({{0.5, 0.5}, {0.5, 0.5}});
    gap = oracle::bayes_consistency_gap(x1_given_x2, x2_given_x1);
    std::cout << "tables built-in\n";
  } else {
    gap = oracle::bayes_consistency_gap(read_table(x1_path), read_table(x2_path));
  }
  std::cout << std::setprecision(17) << "consistency_gap " << gap << '\n'
            << "odds_mismatch " << std::exp(gap) << '\n'
            << (gap > 1e-12 ? "inconsistent" : "consistent") << '\n';
  return kOk;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigInvalid:
      return kConfig;
    case Errc::ScorerFailure:
    case Errc::ConnectFailure:
    case Errc::VersionMismatch:
    case Errc::MalformedResponse:
      return kScorer;
    default:
      return kOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metropolis-Hastings sampling from masked language model energies"};
  app.require_subcommand(1);

  CommonOptions sample_opts;
  auto* sample = app.add_subcommand("sample", "run the configured chains and export traces");
  add_common(*sample, sample_opts);

  CommonOptions oracle_opts;
  bool write_kernel = false;
  auto* oracle_cmd = app.add_subcommand("oracle", "exact kernel, stationarity and detailed balance");
  add_common(*oracle_cmd, oracle_opts);
  oracle_cmd->add_flag("--write-kernel", write_kernel, "also write the dense kernel as CSV");

  CommonOptions compare_opts;
  auto* compare = app.add_subcommand("compare", "mh-raw, mh-norm and deg-gibbs on one model");
  add_common(*compare, compare_opts);

  std::string x1_path;
  std::string x2_path;
  auto* counter = app.add_subcommand("counterexample", "consistency gap of two conditional tables");
  counter->add_option("--x1-given-x2", x1_path, "CSV, row r = p(X1 | X2 = r)")->check(CLI::ExistingFile);
  counter->add_option("--x2-given-x1", x2_path, "CSV, row r = p(X2 | X1 = r)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*sample) return cmd_sample(sample_opts);
    if (*oracle_cmd) return cmd_oracle(oracle_opts, write_kernel);
    if (*compare) return cmd_compare(compare_opts);
    if (*counter) return cmd_counterexample(x1_path, x2_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
