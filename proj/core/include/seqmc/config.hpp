#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "seqmc/sampler.hpp"
#include "seqmc/trace_export.hpp"

namespace seqmc {

struct BridgeOptions {
  std::chrono::milliseconds timeout{5000};
  unsigned retries = 3;
  std::chrono::milliseconds backoff{50};
};

struct ModelSpec {
  enum class Source { tabular, file, remote };

  Source source = Source::tabular;
  std::uint64_t seed = 7;
  std::size_t vocab_size = 3;
  std::size_t length = 3;
  double scale = 2.0;
  std::filesystem::path table_path;
  std::string endpoint;
  BridgeOptions bridge;
};

struct OracleOptions {
  bool enabled = true;
  double tv_tolerance = 1e-6;
  double balance_tolerance = 1e-10;
};

struct ExperimentConfig {
  ModelSpec model;
  SamplerConfig sampler;
  std::size_t chains = 5;
  std::uint64_t master_seed = 0;
  std::size_t parallelism = 1;
  /// Every chain gets the stream of chain 0 (debugging aid).
  bool forced_seed = false;
  OracleOptions oracle;
  std::filesystem::path output_root = "runs";
  std::vector<TraceFormat> formats{TraceFormat::csv};
  /// Hash of the canonical key/value text.
  std::string hash;
};

/// Flat `section.key -> value` view of an experiment, seeded with every
/// default. Sections are seq-core module names: energy, proposal, sampler,
/// oracle, diag-io, scorer-bridge.
class ConfigMap {
 public:
  ConfigMap();

  /// Unknown keys are ConfigInvalid.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  /// INI text: `[section]` headers, `key = value` lines, `#`/`;` comments.
  void merge_ini(std::string_view text);
  void merge_file(const std::filesystem::path& path);
  /// SEQMC_SEED replaces diag-io.master_seed when set.
  void apply_environment();

  /// Sorted `key=value` lines of every entry that affects results (output
  /// location and parallelism excluded).
  std::string canonical_text() const;
  /// 16 hex digits, FNV-1a 64 of canonical_text().
  std::string hash() const;

  ExperimentConfig to_experiment() const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace seqmc
