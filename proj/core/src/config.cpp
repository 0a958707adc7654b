#include "seqmc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "seqmc/error.hpp"

namespace seqmc {

namespace {

struct KeySpec {
  const char* key;
  const char* default_value;
  bool hashed;
};

// Single source of truth for keys and defaults.
constexpr KeySpec kKeys[] = {
    {"energy.model", "tabular", true},
    {"energy.seed", "7", true},
    {"energy.vocab", "3", true},
    {"energy.length", "3", true},
    {"energy.scale", "2.0", true},
    {"energy.table", "", true},
    {"energy.kind", "raw", true},
    {"proposal.temperature", "1.0", true},
    {"proposal.nucleus", "1.0", true},
    {"proposal.block", "off", true},
    {"proposal.block_size", "2", true},
    {"proposal.block_fraction", "0.5", true},
    {"proposal.scan", "random", true},
    {"sampler.kind", "mh", true},
    {"sampler.epochs", "26", true},
    {"sampler.burn_in", "7", true},
    {"sampler.length", "0", true},
    {"sampler.warm_start", "greedy", true},
    {"sampler.target_temp", "1.0", true},
    {"sampler.anneal", "off", true},
    {"sampler.anneal_initial", "1.0", true},
    {"sampler.anneal_rate", "0.02", true},
    {"sampler.anneal_floor", "0.05", true},
    {"sampler.forced_accept_epochs", "0", true},
    {"sampler.track_both", "false", true},
    {"oracle.enabled", "true", true},
    {"oracle.tv_tolerance", "1e-6", true},
    {"oracle.balance_tolerance", "1e-10", true},
    {"diag-io.chains", "5", true},
    {"diag-io.master_seed", "0", true},
    {"diag-io.forced_seed", "false", true},
    {"diag-io.include_burn_in", "false", true},
    {"diag-io.format", "csv", true},
    {"diag-io.parallelism", "1", false},
    {"diag-io.output", "runs", false},
    {"scorer-bridge.endpoint", "", true},
    {"scorer-bridge.timeout_ms", "5000", true},
    {"scorer-bridge.retries", "3", true},
    {"scorer-bridge.backoff_ms", "50", true},
};

[[noreturn]] void invalid(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(Errc::ConfigInvalid, key + " = '" + value + "': " + why);
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) invalid(key, value, "expected a non-negative integer");
  return out;
}

double to_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) invalid(key, value, "expected a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  invalid(key, value, "expected true/false");
}

template <typename Enum>
Enum to_enum(const std::string& key, const std::string& value,
             std::initializer_list<std::pair<const char*, Enum>> options) {
  for (const auto& [name, e] : options) {
    if (value == name) return e;
  }
  std::string names;
  for (const auto& option : options) names += std::string(names.empty() ? "" : "|") + option.first;
  invalid(key, value, "expected one of " + names);
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

ConfigMap::ConfigMap() {
  for (const auto& k : kKeys) entries_.emplace(k.key, k.default_value);
}

const std::vector<std::string>& ConfigMap::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& k : kKeys) out.emplace_back(k.key);
    return out;
  }();
  return keys;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(Errc::ConfigInvalid, "unknown key '" + key + "'");
  it->second = trim(value);
}

const std::string& ConfigMap::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(Errc::ConfigInvalid, "unknown key '" + key + "'");
  return it->second;
}

void ConfigMap::merge_ini(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(Errc::ConfigInvalid, "key '" + section + "' must sit inside a [section]");
    }
    for (const auto& [key, value] : body) set(section + "." + key, value.data());
  }
}

void ConfigMap::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigInvalid, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  merge_ini(text.str());
}

void ConfigMap::apply_environment() {
  if (const char* seed = std::getenv("SEQMC_SEED"); seed != nullptr && *seed != '\0') {
    to_uint("SEQMC_SEED", seed);
    set("diag-io.master_seed", seed);
  }
}

std::string ConfigMap::canonical_text() const {
  std::string out;
  for (const auto& k : kKeys) {
    if (!k.hashed) continue;
    out += k.key;
    out += '=';
    out += entries_.at(k.key);
    out += '\n';
  }
  return out;
}

std::string ConfigMap::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

ExperimentConfig ConfigMap::to_experiment() const {
  const auto str = [this](const char* key) -> const std::string& { return get(key); };
  const auto uint = [&](const char* key) { return to_uint(key, str(key)); };
  const auto real = [&](const char* key) { return to_real(key, str(key)); };
  const auto flag = [&](const char* key) { return to_bool(key, str(key)); };

  ExperimentConfig c;
  auto& m = c.model;
  m.source = to_enum<ModelSpec::Source>("energy.model", str("energy.model"),
                                        {{"tabular", ModelSpec::Source::tabular},
                                         {"file", ModelSpec::Source::file},
                                         {"remote", ModelSpec::Source::remote}});
  m.seed = uint("energy.seed");
  m.vocab_size = uint("energy.vocab");
  m.length = uint("energy.length");
  m.scale = real("energy.scale");
  m.table_path = str("energy.table");
  m.endpoint = str("scorer-bridge.endpoint");
  m.bridge.timeout = std::chrono::milliseconds(uint("scorer-bridge.timeout_ms"));
  m.bridge.retries = static_cast<unsigned>(uint("scorer-bridge.retries"));
  m.bridge.backoff = std::chrono::milliseconds(uint("scorer-bridge.backoff_ms"));
  if (m.source == ModelSpec::Source::file && m.table_path.empty()) {
    invalid("energy.table", "", "required when energy.model = file");
  }
  if (m.source == ModelSpec::Source::remote && m.endpoint.empty()) {
    invalid("scorer-bridge.endpoint", "", "required when energy.model = remote");
  }

  auto& s = c.sampler;
  s.energy = to_enum<EnergyKind>("energy.kind", str("energy.kind"),
                                 {{"raw", EnergyKind::raw}, {"norm", EnergyKind::norm}});
  s.kind = to_enum<SamplerKind>("sampler.kind", str("sampler.kind"),
                                {{"mh", SamplerKind::mh}, {"deg_gibbs", SamplerKind::degenerate_gibbs}});
  s.proposal.temperature = real("proposal.temperature");
  s.proposal.nucleus = real("proposal.nucleus");
  const std::string& block = str("proposal.block");
  if (block == "fixed" || block == "annealed") {
    BlockPolicy policy;
    policy.mode = block == "fixed" ? BlockPolicy::Mode::fixed : BlockPolicy::Mode::annealed;
    policy.fixed_size = uint("proposal.block_size");
    policy.initial_fraction = real("proposal.block_fraction");
    s.block = policy;
  } else if (block != "off") {
    invalid("proposal.block", block, "expected one of off|fixed|annealed");
  }
  s.scan = to_enum<ScanOrder>("proposal.scan", str("proposal.scan"),
                              {{"random", ScanOrder::random}, {"left_to_right", ScanOrder::left_to_right}});
  s.warm = to_enum<WarmStart>("sampler.warm_start", str("sampler.warm_start"),
                              {{"greedy", WarmStart::greedy}, {"sample_all", WarmStart::sample_all}});
  s.epochs = uint("sampler.epochs");
  s.burn_in = uint("sampler.burn_in");
  s.length = uint("sampler.length");
  s.target_temp = real("sampler.target_temp");
  if (flag("sampler.anneal")) {
    s.anneal = AnnealSchedule{real("sampler.anneal_initial"), real("sampler.anneal_rate"),
                              real("sampler.anneal_floor")};
  }
  s.forced_accept_epochs = uint("sampler.forced_accept_epochs");
  s.track_both_energies = flag("sampler.track_both");
  s.include_burn_in_metrics = flag("diag-io.include_burn_in");

  c.chains = uint("diag-io.chains");
  c.master_seed = uint("diag-io.master_seed");
  c.parallelism = uint("diag-io.parallelism");
  c.forced_seed = flag("diag-io.forced_seed");
  c.output_root = str("diag-io.output");
  const std::string& format = str("diag-io.format");
  if (format == "csv") {
    c.formats = {TraceFormat::csv};
  } else if (format == "jsonl") {
    c.formats = {TraceFormat::jsonl};
  } else if (format == "both") {
    c.formats = {TraceFormat::csv, TraceFormat::jsonl};
  } else {
    invalid("diag-io.format", format, "expected one of csv|jsonl|both");
  }
  c.oracle.enabled = flag("oracle.enabled");
  c.oracle.tv_tolerance = real("oracle.tv_tolerance");
  c.oracle.balance_tolerance = real("oracle.balance_tolerance");

  if (c.chains == 0) invalid("diag-io.chains", str("diag-io.chains"), "must be at least 1");
  if (s.epochs == 0) invalid("sampler.epochs", str("sampler.epochs"), "must be at least 1");
  if (s.burn_in >= s.epochs) invalid("sampler.burn_in", str("sampler.burn_in"), "must be below epochs");
  if (c.parallelism == 0) invalid("diag-io.parallelism", "0", "must be at least 1");
  c.hash = hash();
  return c;
}

}  // namespace seqmc
