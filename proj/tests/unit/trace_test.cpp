#include <gtest/gtest.h>

#include "seqmc/trace.hpp"

namespace seqmc {
namespace {

StepOutcome outcome(bool accepted, bool novel) {
  StepOutcome o;
  o.accepted = accepted;
  o.novel = novel;
  o.acceptance_prob = accepted ? 1.0 : 0.0;
  return o;
}

StepContext context(std::size_t epoch, bool burn_in, double raw = 0.0) {
  StepContext c;
  c.epoch = epoch;
  c.burn_in = burn_in;
  c.energy_raw = raw;
  return c;
}

TEST(Trace, RejectedStepLeavesNumerators) {
  Trace t;
  t.record_step(outcome(false, false), context(0, false));
  EXPECT_EQ(t.accepted_steps(), 0u);
  EXPECT_EQ(t.novel_steps(), 0u);
  EXPECT_EQ(t.counted_steps(), 1u);
}

TEST(Trace, AcceptedSelfProposalIsNotNovel) {
  Trace t;
  t.record_step(outcome(true, false), context(0, false));
  EXPECT_EQ(t.accepted_steps(), 1u);
  EXPECT_EQ(t.novel_steps(), 0u);
}

TEST(Trace, AcceptedChangeCountsTwice) {
  Trace t;
  t.record_step(outcome(true, true), context(0, false));
  EXPECT_EQ(t.accepted_steps(), 1u);
  EXPECT_EQ(t.novel_steps(), 1u);
  EXPECT_EQ(t.acceptance_rate(), 1.0);
  EXPECT_EQ(t.novel_rate(), 1.0);
}

TEST(Trace, BurnInExcludedByDefault) {
  Trace t;
  t.record_step(outcome(true, true), context(0, true));
  t.record_step(outcome(false, false), context(1, false));
  t.record_step(outcome(true, false), context(1, false));
  EXPECT_EQ(t.steps().size(), 3u);
  EXPECT_EQ(t.counted_steps(), 2u);
  EXPECT_DOUBLE_EQ(t.acceptance_rate(), 0.5);
  EXPECT_DOUBLE_EQ(t.novel_rate(), 0.0);

  Trace all(true);
  all.record_step(outcome(true, true), context(0, true));
  all.record_step(outcome(false, false), context(1, false));
  EXPECT_EQ(all.counted_steps(), 2u);
  EXPECT_DOUBLE_EQ(all.novel_rate(), 0.5);
}

TEST(Trace, EmptyRatesAreZero) {
  const Trace t;
  EXPECT_EQ(t.acceptance_rate(), 0.0);
  EXPECT_EQ(t.novel_rate(), 0.0);
}

TEST(Trace, EpochEnergiesAverageEachEpoch) {
  Trace t;
  t.record_step(outcome(true, true), context(0, true, 1.0));
  t.record_step(outcome(true, true), context(0, true, 3.0));
  t.record_step(outcome(true, true), context(1, false, -2.0));
  const auto e = t.epoch_energies();
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].epoch, 0u);
  EXPECT_DOUBLE_EQ(*e[0].mean_raw, 2.0);
  EXPECT_FALSE(e[0].mean_norm.has_value());
  EXPECT_DOUBLE_EQ(*e[1].mean_raw, -2.0);
}

TEST(Trace, RatesStayInUnitInterval) {
  Trace t;
  for (int i = 0; i < 50; ++i) t.record_step(outcome(i % 3 == 0, i % 6 == 0), context(0, false));
  EXPECT_GE(t.acceptance_rate(), 0.0);
  EXPECT_LE(t.acceptance_rate(), 1.0);
  EXPECT_LE(t.novel_rate(), t.acceptance_rate());
}

}  // namespace
}  // namespace seqmc
