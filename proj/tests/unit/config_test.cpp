#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "seqmc/config.hpp"
#include "seqmc/error.hpp"
#include "test_models.hpp"

namespace seqmc {
namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::IoFailure;
}

std::string fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : text) {
    h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value, 1);
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

TEST(ConfigMap, DefaultsMatchLibraryDefaults) {
  const auto c = ConfigMap().to_experiment();
  const SamplerConfig s;
  EXPECT_EQ(c.model.source, ModelSpec::Source::tabular);
  EXPECT_EQ(c.model.seed, 7u);
  EXPECT_EQ(c.model.vocab_size, 3u);
  EXPECT_EQ(c.model.length, 3u);
  EXPECT_EQ(c.model.scale, 2.0);
  EXPECT_EQ(c.sampler.kind, s.kind);
  EXPECT_EQ(c.sampler.energy, s.energy);
  EXPECT_EQ(c.sampler.epochs, 26u);
  EXPECT_EQ(c.sampler.burn_in, 7u);
  EXPECT_EQ(c.sampler.proposal.temperature, 1.0);
  EXPECT_EQ(c.sampler.proposal.nucleus, 1.0);
  EXPECT_FALSE(c.sampler.block.has_value());
  EXPECT_FALSE(c.sampler.anneal.has_value());
  EXPECT_EQ(c.sampler.scan, ScanOrder::random);
  EXPECT_EQ(c.sampler.warm, WarmStart::greedy);
  EXPECT_EQ(c.chains, 5u);
  EXPECT_EQ(c.master_seed, 0u);
  EXPECT_EQ(c.parallelism, 1u);
  EXPECT_FALSE(c.forced_seed);
  EXPECT_TRUE(c.oracle.enabled);
  EXPECT_EQ(c.oracle.tv_tolerance, 1e-6);
  EXPECT_EQ(c.formats, std::vector<TraceFormat>{TraceFormat::csv});
  EXPECT_EQ(c.model.bridge.retries, 3u);
  EXPECT_EQ(c.model.bridge.timeout, std::chrono::milliseconds(5000));
  EXPECT_EQ(c.hash, ConfigMap().hash());
}

TEST(ConfigMap, IniSectionsMapToKeys) {
  ConfigMap m;
  m.merge_ini(R"(
# comment
[energy]
kind = norm
vocab = 4
[proposal]
temperature = 0.5   
nucleus = 0.9
block = annealed
block_fraction = 0.25
; another comment
[sampler]
kind = deg_gibbs
anneal = on
anneal_rate = 0.01
[diag-io]
format = both
chains = 10
[scorer-bridge]
endpoint = tcp://127.0.0.1:9
retries = 1
)");
  const auto c = m.to_experiment();
  EXPECT_EQ(c.sampler.energy, EnergyKind::norm);
  EXPECT_EQ(c.model.vocab_size, 4u);
  EXPECT_EQ(c.sampler.proposal.temperature, 0.5);
  EXPECT_EQ(c.sampler.proposal.nucleus, 0.9);
  ASSERT_TRUE(c.sampler.block.has_value());
  EXPECT_EQ(c.sampler.block->mode, BlockPolicy::Mode::annealed);
  EXPECT_EQ(c.sampler.block->initial_fraction, 0.25);
  EXPECT_EQ(c.sampler.kind, SamplerKind::degenerate_gibbs);
  ASSERT_TRUE(c.sampler.anneal.has_value());
  EXPECT_EQ(c.sampler.anneal->rate, 0.01);
  EXPECT_EQ(c.sampler.anneal->initial, 1.0);
  EXPECT_EQ(c.formats.size(), 2u);
  EXPECT_EQ(c.chains, 10u);
  EXPECT_EQ(c.model.endpoint, "tcp://127.0.0.1:9");
  EXPECT_EQ(c.model.bridge.retries, 1u);
}

TEST(ConfigMap, RejectsBadInput) {
  EXPECT_EQ(code_of([] { ConfigMap().set("energy.colour", "red"); }), Errc::ConfigInvalid);
  EXPECT_EQ(code_of([] { (void)ConfigMap().get("nope"); }), Errc::ConfigInvalid);
  EXPECT_EQ(code_of([] { ConfigMap().merge_ini("[energy]\nflavour = 1\n"); }), Errc::ConfigInvalid);
  EXPECT_EQ(code_of([] { ConfigMap().merge_ini("seed = 3\n"); }), Errc::ConfigInvalid);
  EXPECT_EQ(code_of([] { ConfigMap().merge_ini("[energy]\nseed = 1\nseed = 2\n"); }), Errc::ConfigInvalid);
  EXPECT_EQ(code_of([] { ConfigMap().merge_ini("[energy\nseed = 1\n"); }), Errc::ConfigInvalid);
  EXPECT_EQ(code_of([] { ConfigMap().merge_file("/nonexistent/seqmc.ini"); }), Errc::ConfigInvalid);

  const std::vector<std::pair<std::string, std::string>> bad{
      {"energy.seed", "-1"},         {"energy.seed", "12x"},        {"energy.scale", "big"},
      {"energy.kind", "fancy"},      {"sampler.kind", "gibbs"},     {"proposal.block", "maybe"},
      {"proposal.scan", "spiral"},   {"sampler.anneal", "perhaps"}, {"diag-io.format", "xml"},
      {"diag-io.chains", "0"},       {"sampler.epochs", "0"},       {"sampler.burn_in", "26"},
      {"diag-io.parallelism", "0"},  {"energy.model", "file"},      {"energy.model", "remote"},
      {"sampler.warm_start", "hot"}, {"energy.vocab", ""},
  };
  for (const auto& [key, value] : bad) {
    ConfigMap m;
    m.set(key, value);
    EXPECT_EQ(code_of([&] { (void)m.to_experiment(); }), Errc::ConfigInvalid) << key << "=" << value;
  }
}

TEST(ConfigMap, BooleanSpellings) {
  for (const char* yes : {"true", "1", "on", "yes"}) {
    ConfigMap m;
    m.set("diag-io.forced_seed", yes);
    EXPECT_TRUE(m.to_experiment().forced_seed);
  }
  for (const char* no : {"false", "0", "off", "no"}) {
    ConfigMap m;
    m.set("diag-io.forced_seed", no);
    EXPECT_FALSE(m.to_experiment().forced_seed);
  }
}

TEST(ConfigMap, LaterSourcesOverrideEarlier) {
  test::TempDir dir;
  std::ofstream(dir / "run.ini") << "[diag-io]\nmaster_seed = 11\nchains = 2\n";
  ConfigMap m;
  m.merge_file(dir / "run.ini");
  EXPECT_EQ(m.to_experiment().master_seed, 11u);
  {
    ScopedEnv env("SEQMC_SEED", "42");
    m.apply_environment();
  }
  EXPECT_EQ(m.to_experiment().master_seed, 42u);
  m.set("diag-io.master_seed", "5");
  EXPECT_EQ(m.to_experiment().master_seed, 5u);
  EXPECT_EQ(m.to_experiment().chains, 2u);
}

TEST(ConfigMap, EnvironmentSeedMustBeAnInteger) {
  ScopedEnv env("SEQMC_SEED", "seven");
  EXPECT_EQ(code_of([] { ConfigMap().apply_environment(); }), Errc::ConfigInvalid);
}

TEST(ConfigMap, HashIsFnv1aOfCanonicalText) {
  EXPECT_EQ(fnv1a(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a("a"), "af63dc4c8601ec8c");
  ConfigMap m;
  EXPECT_EQ(m.hash(), fnv1a(m.canonical_text()));
  EXPECT_EQ(m.hash().size(), 16u);
  EXPECT_NE(m.canonical_text().find("energy.seed=7\n"), std::string::npos);
}

TEST(ConfigMap, HashIgnoresOutputAndParallelismOnly) {
  const std::string base = ConfigMap().hash();
  ConfigMap moved;
  moved.set("diag-io.output", "/tmp/elsewhere");
  moved.set("diag-io.parallelism", "8");
  EXPECT_EQ(moved.hash(), base);
  for (const auto& key : ConfigMap::known_keys()) {
    if (key == "diag-io.output" || key == "diag-io.parallelism") continue;
    ConfigMap changed;
    changed.set(key, changed.get(key) + "9");
    EXPECT_NE(changed.hash(), base) << key;
  }
}

TEST(ConfigMap, CanonicalTextIsStableAcrossInputOrder) {
  ConfigMap a;
  a.merge_ini("[sampler]\nepochs = 30\n[energy]\nseed = 3\n");
  ConfigMap b;
  b.set("energy.seed", " 3 ");
  b.set("sampler.epochs", "30");
  EXPECT_EQ(a.canonical_text(), b.canonical_text());
  EXPECT_EQ(a.hash(), b.hash());
}

}  // namespace
}  // namespace seqmc
