#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seqmc/config.hpp"
#include "seqmc/sampler.hpp"

namespace seqmc {

/// Cross-chain mean and population standard deviation.
struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

MetricSummary summarize(std::span<const double> values);

/// Energies are averaged within each epoch per chain first, then across
/// chains at the same epoch index.
struct EpochSummary {
  std::size_t epoch = 0;
  std::optional<MetricSummary> energy_raw;
  std::optional<MetricSummary> energy_norm;
};

struct OracleSection {
  std::size_t states = 0;
  /// Empty when the kernel could not be built (too many states, annealing,
  /// annealed blocks, forced acceptance).
  std::optional<double> stationary_tv;
  std::optional<double> balance_residual;
  /// Pooled post-burn-in samples of every chain against the exact target.
  std::optional<double> empirical_tv;
  /// MH kernels only; degenerate Gibbs is not expected to meet it.
  bool within_tolerance = true;
};

struct Report {
  std::string config_hash;
  std::vector<ChainResult> chains;
  MetricSummary acceptance_rate;
  MetricSummary novel_rate;
  std::vector<EpochSummary> epochs;
  std::optional<OracleSection> oracle;
  std::vector<std::string> warnings;
};

/// Tabular, file-backed or remote scorer as described by `spec`.
std::unique_ptr<Scorer> make_scorer(const ModelSpec& spec);

/// Runs `config.chains` chains, up to `config.parallelism` at a time. Chain i
/// draws from derive_seed(master_seed, i), or from chain 0's seed in
/// forced-seed mode. The result does not depend on parallelism.
Report run_experiment(const ExperimentConfig& config, const Scorer& model);
Report run_experiment(const ExperimentConfig& config);

std::string report_json(const Report& report);

/// report.json, one trace file per configured format and samples.jsonl
/// (final and collected states as token-id arrays) under `dir`.
void write_run(const Report& report, const ExperimentConfig& config,
               const std::filesystem::path& dir);

}  // namespace seqmc
