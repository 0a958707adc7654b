#include "seqmc/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "seqmc/bridge.hpp"
#include "seqmc/error.hpp"
#include "seqmc/oracle.hpp"
#include "seqmc/tabular_model.hpp"
#include "seqmc/trace_export.hpp"

namespace seqmc {

namespace {

using nlohmann::json;

std::vector<ChainResult> run_chains(const ExperimentConfig& config, const Scorer& model) {
  std::vector<std::optional<ChainResult>> slots(config.chains);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (std::size_t i = next++; i < config.chains; i = next++) {
      try {
        const auto seed = derive_seed(config.master_seed, config.forced_seed ? 0 : i);
        slots[i] = run_chain(model, config.sampler, RandomStream(seed), i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.chains;
      }
    }
  };

  const std::size_t threads = std::min(config.parallelism, config.chains);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ChainResult> out;
  out.reserve(slots.size());
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

std::vector<EpochSummary> summarize_epochs(const std::vector<ChainResult>& chains) {
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_epoch;
  for (const auto& chain : chains) {
    for (const auto& e : chain.trace.epoch_energies()) {
      auto& [raw, norm] = by_epoch[e.epoch];
      if (e.mean_raw) raw.push_back(*e.mean_raw);
      if (e.mean_norm) norm.push_back(*e.mean_norm);
    }
  }
  std::vector<EpochSummary> out;
  for (const auto& [epoch, values] : by_epoch) {
    EpochSummary s;
    s.epoch = epoch;
    if (!values.first.empty()) s.energy_raw = summarize(values.first);
    if (!values.second.empty()) s.energy_norm = summarize(values.second);
    out.push_back(s);
  }
  return out;
}

std::optional<std::string> kernel_unavailable(const SamplerConfig& s) {
  if (s.anneal) return "annealed target temperature has no fixed stationary distribution";
  if (s.forced_accept_epochs > 0) return "forced acceptance breaks detailed balance";
  if (s.block && s.block->mode == BlockPolicy::Mode::annealed) {
    return "annealed block sizes have no fixed kernel";
  }
  return std::nullopt;
}

void run_oracle(const ExperimentConfig& config, const Scorer& model, Report& report) {
  const auto& s = config.sampler;
  const std::size_t length = s.resolved_length(model);
  if (length != model.length()) {
    report.warnings.push_back("oracle skipped: run length differs from the scorer length");
    return;
  }
  std::size_t states = 0;
  try {
    states = oracle::state_count(model.vocab().size(), length);
  } catch (const Error& e) {
    if (e.code() != Errc::StateSpaceTooLarge) throw;
    report.warnings.push_back(std::string("oracle skipped: ") + e.what());
    return;
  }

  OracleSection section;
  section.states = states;
  const auto target = oracle::enumerate_target(model, s.energy, s.target_temp);

  std::vector<double> counts(states, 0.0);
  std::size_t total = 0;
  for (const auto& chain : report.chains) {
    for (const auto& sample : chain.samples) {
      counts[encode_state(sample.tokens(), model.vocab().size())] += 1.0;
      ++total;
    }
  }
  if (total > 0) {
    for (auto& c : counts) c /= static_cast<double>(total);
    section.empirical_tv = oracle::total_variation(counts, target.probs);
  }

  if (const auto why = kernel_unavailable(s)) {
    report.warnings.push_back("oracle kernel skipped: " + *why);
  } else if (states > oracle::kMaxKernelStates) {
    report.warnings.push_back("oracle kernel skipped: " + std::to_string(states) +
                              " states exceed the dense kernel limit");
  } else {
    oracle::SamplerSpec spec{s.kind, s.energy, s.target_temp,
                             s.block ? std::clamp<std::size_t>(s.block->fixed_size, 1, length) : 1};
    const auto kernel = oracle::transition_kernel(model, spec, s.proposal);
    const auto pi = oracle::stationary_distribution(kernel);
    section.stationary_tv = oracle::total_variation(pi, target.probs);
    section.balance_residual = oracle::detailed_balance_residual(kernel, target.probs);
    if (s.kind == SamplerKind::mh) {
      section.within_tolerance = *section.stationary_tv <= config.oracle.tv_tolerance &&
                                 *section.balance_residual <= config.oracle.balance_tolerance;
    }
  }
  report.oracle = section;
}

json summary_json(const MetricSummary& m) { return {{"mean", m.mean}, {"std", m.stddev}}; }

template <typename T>
json optional_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

json tokens_json(const Sequence& seq) { return json(seq.tokens()); }

}  // namespace

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

std::unique_ptr<Scorer> make_scorer(const ModelSpec& spec) {
  switch (spec.source) {
    case ModelSpec::Source::tabular:
      return std::make_unique<TabularMLM>(
          TabularMLM::generate(spec.seed, spec.vocab_size, spec.length, spec.scale));
    case ModelSpec::Source::file:
      return std::make_unique<TabularMLM>(TabularMLM::load(spec.table_path));
    case ModelSpec::Source::remote:
      return std::make_unique<RemoteScorer>(spec.endpoint, spec.bridge);
  }
  throw Error(Errc::ConfigInvalid, "unknown model source");
}

Report run_experiment(const ExperimentConfig& config, const Scorer& model) {
  if (config.chains == 0) throw Error(Errc::ConfigInvalid, "chains must be at least 1");
  if (config.parallelism == 0) throw Error(Errc::ConfigInvalid, "parallelism must be at least 1");
  config.sampler.validate(model);

  Report report;
  report.config_hash = config.hash;
  report.chains = run_chains(config, model);

  std::vector<double> acceptance;
  std::vector<double> novel;
  for (const auto& chain : report.chains) {
    acceptance.push_back(chain.trace.acceptance_rate());
    novel.push_back(chain.trace.novel_rate());
  }
  report.acceptance_rate = summarize(acceptance);
  report.novel_rate = summarize(novel);
  report.epochs = summarize_epochs(report.chains);
  if (config.oracle.enabled) run_oracle(config, model, report);
  return report;
}

Report run_experiment(const ExperimentConfig& config) {
  const auto model = make_scorer(config.model);
  return run_experiment(config, *model);
}

std::string report_json(const Report& report) {
  json chains = json::array();
  for (std::size_t i = 0; i < report.chains.size(); ++i) {
    const auto& c = report.chains[i];
    chains.push_back({{"chain_id", i},
                      {"acceptance_rate", c.trace.acceptance_rate()},
                      {"novel_rate", c.trace.novel_rate()},
                      {"counted_steps", c.trace.counted_steps()},
                      {"final_state", tokens_json(c.final_state)}});
  }
  json epochs = json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"energy_raw", e.energy_raw ? summary_json(*e.energy_raw) : json(nullptr)},
                      {"energy_norm", e.energy_norm ? summary_json(*e.energy_norm) : json(nullptr)}});
  }
  json out = {{"config_hash", report.config_hash},
              {"aggregation", "per-chain rates, then cross-chain mean and population std; "
                              "epoch energies aligned by epoch index"},
              {"acceptance_rate", summary_json(report.acceptance_rate)},
              {"novel_rate", summary_json(report.novel_rate)},
              {"chains", chains},
              {"epochs", epochs},
              {"warnings", report.warnings}};
  if (report.oracle) {
    const auto& o = *report.oracle;
    out["oracle"] = {{"states", o.states},
                     {"stationary_tv", optional_json(o.stationary_tv)},
                     {"balance_residual", optional_json(o.balance_residual)},
                     {"empirical_tv", optional_json(o.empirical_tv)},
                     {"within_tolerance", o.within_tolerance}};
  } else {
    out["oracle"] = nullptr;
  }
  return out.dump(2) + "\n";
}

void write_run(const Report& report, const ExperimentConfig& config,
               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  const auto write_text = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  };
  write_text(dir / "report.json", report_json(report));

  std::vector<Trace> traces;
  for (const auto& c : report.chains) traces.push_back(c.trace);
  for (const auto format : config.formats) {
    const auto name = format == TraceFormat::csv ? "trace.csv" : "trace.jsonl";
    export_trace(traces, dir / name, format, report.config_hash);
  }

  std::string samples;
  for (std::size_t i = 0; i < report.chains.size(); ++i) {
    json samples_json = json::array();
    for (const auto& s : report.chains[i].samples) samples_json.push_back(tokens_json(s));
    samples += json{{"chain_id", i},
                    {"final_state", tokens_json(report.chains[i].final_state)},
                    {"samples", samples_json}}
                   .dump() +
               "\n";
  }
  write_text(dir / "samples.jsonl", samples);
}

}  // namespace seqmc
