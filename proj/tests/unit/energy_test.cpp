#include <gtest/gtest.h>

#include <cmath>

#include "seqmc/energy.hpp"
#include "seqmc/error.hpp"
#include "seqmc/oracle.hpp"
#include "test_models.hpp"

namespace seqmc {
namespace {

// Direct lookup into the raw table, independent of TabularMLM::context_key.
double lookup(const TabularMLM& m, const std::vector<Token>& tokens, Position t, Token w) {
  const std::size_t v = m.vocab().size();
  const std::size_t len = tokens.size();
  std::uint64_t key = 0;
  for (Position s = 0; s < len; ++s) {
    if (s != t) key = key * v + tokens[s];
  }
  std::uint64_t per_position = 1;
  for (std::size_t i = 0; i + 1 < len; ++i) per_position *= v;
  return m.table()[(t * per_position + key) * v + w];
}

TEST(PositionalLogits, ZeroModelGivesZeroRows) {
  const auto m = test::zero_model(3, 3);
  const Vocab& v = m.vocab();
  const auto rows = m.positional_logits(apply_mask(Sequence({1, 2, 0}, v), {0, 2}, v));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].position, 0u);
  EXPECT_EQ(rows[1].position, 2u);
  for (const auto& r : rows) EXPECT_EQ(r.logits, LogitRow(3, 0.0));
}

TEST(PositionalLogits, SeededModelIsRepeatable) {
  const auto m = TabularMLM::generate(7, 3, 3, 2.0);
  const auto view = apply_mask(Sequence({0, 1, 2}, m.vocab()), {1}, m.vocab());
  const auto a = m.positional_logits(view);
  const auto b = m.positional_logits(view);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].logits, b[0].logits);
}

TEST(EnergyRaw, ZeroModelIsZero) {
  const auto m = test::zero_model(2, 4);
  EXPECT_EQ(energy_raw(m, Sequence({0, 1, 1, 0}, m.vocab())).value, 0.0);
}

TEST(EnergyRaw, ConstantRowsSumDirectly) {
  const auto m = test::constant_row_model({std::log(2.0), std::log(3.0)}, 2);
  const auto e = energy_raw(m, Sequence({1, 1}, m.vocab()));
  EXPECT_EQ(e.kind, EnergyKind::raw);
  EXPECT_NEAR(e.value, -2.0 * std::log(3.0), 1e-15);
}

TEST(EnergyRaw, MatchesTableLookup) {
  const auto m = TabularMLM::generate(7, 3, 3, 2.0);
  const std::vector<Token> tokens{0, 1, 2};
  double expected = 0.0;
  for (Position t = 0; t < 3; ++t) expected -= lookup(m, tokens, t, tokens[t]);
  EXPECT_NEAR(energy_raw(m, Sequence(tokens, m.vocab())).value, expected, 1e-12);
}

TEST(EnergyNorm, UniformConditionals) {
  const auto m2 = test::zero_model(2, 2);
  EXPECT_NEAR(energy_norm(m2, Sequence({0, 1}, m2.vocab())).value, 1.386294, 1e-6);
  EXPECT_NEAR(energy_norm(m2, Sequence({0, 1}, m2.vocab())).value, 2 * std::log(2.0), 1e-14);
  const auto m4 = test::zero_model(4, 3);
  EXPECT_NEAR(energy_norm(m4, Sequence({3, 1, 2}, m4.vocab())).value, 3 * std::log(4.0), 1e-14);
}

TEST(EnergyNorm, MatchesSoftmaxOfTableLookup) {
  const auto m = TabularMLM::generate(7, 3, 3, 2.0);
  const std::vector<Token> tokens{0, 1, 2};
  double expected = 0.0;
  for (Position t = 0; t < 3; ++t) {
    double z = 0.0;
    for (Token w = 0; w < 3; ++w) z += std::exp(lookup(m, tokens, t, w));
    expected -= lookup(m, tokens, t, tokens[t]) - std::log(z);
  }
  const auto e = energy_norm(m, Sequence(tokens, m.vocab()));
  EXPECT_EQ(e.kind, EnergyKind::norm);
  EXPECT_NEAR(e.value, expected, 1e-12);
}

TEST(EnergyNorm, NonNegativeEverywhere) {
  const auto m = TabularMLM::generate(3, 3, 4, 4.0);
  for (std::uint64_t i = 0; i < 81; ++i) {
    EXPECT_GE(energy_norm(m, decode_state(i, 4, m.vocab())).value, 0.0);
  }
}

TEST(EnergyNorm, ZeroOnlyForCertainConditionals) {
  // Every row puts (numerically) all mass on token 0.
  const auto m = test::constant_row_model({0.0, -800.0}, 3);
  EXPECT_EQ(energy_norm(m, Sequence({0, 0, 0}, m.vocab())).value, 0.0);
  EXPECT_GT(energy_norm(m, Sequence({0, 1, 0}, m.vocab())).value, 0.0);
}

TEST(Energy, RawEqualsNormOnLogNormalizedRows) {
  const auto m = test::log_normalized_model(11, 3, 3);
  for (std::uint64_t i = 0; i < 27; ++i) {
    const auto s = decode_state(i, 3, m.vocab());
    EXPECT_NEAR(energy_raw(m, s).value, energy_norm(m, s).value, 1e-9);
  }
}

TEST(Energy, PairAgreesWithSeparateEvaluations) {
  const auto m = TabularMLM::generate(5, 3, 3, 2.0);
  const Sequence s({2, 0, 1}, m.vocab());
  const auto pair = energy_pair(m, s);
  EXPECT_EQ(pair.raw.value, energy_raw(m, s).value);
  EXPECT_EQ(pair.norm.value, energy_norm(m, s).value);
  EXPECT_EQ(pair.get(EnergyKind::norm).value, pair.norm.value);
  EXPECT_EQ(energy(m, s, EnergyKind::raw).value, pair.raw.value);
}

TEST(Energy, SingleMaskRowIsPositionalLogitsRow) {
  const auto m = TabularMLM::generate(5, 3, 3, 2.0);
  const Sequence s({2, 0, 1}, m.vocab());
  for (Position t = 0; t < 3; ++t) {
    const auto rows = m.positional_logits(apply_mask(s, {t}, m.vocab()));
    EXPECT_EQ(single_mask_row(m, s, t), rows.at(0).logits);
    for (Token w = 0; w < 3; ++w) EXPECT_EQ(rows[0].logits[w], lookup(m, {2, 0, 1}, t, w));
  }
}

TEST(MlmConditional, UniformOnZeroRow) {
  const auto m = test::zero_model(3, 2);
  const auto d = mlm_conditional(m, apply_mask(Sequence({0, 0}, m.vocab()), {1}, m.vocab()), 1);
  for (double p : d.probs()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(MlmConditional, ExponentialsNormalize) {
  const auto m = test::constant_row_model({std::log(1.0), std::log(3.0)}, 2);
  const auto d = mlm_conditional(m, apply_mask(Sequence({0, 0}, m.vocab()), {0}, m.vocab()), 0);
  EXPECT_NEAR(d[0], 0.25, 1e-15);
  EXPECT_NEAR(d[1], 0.75, 1e-15);
}

TEST(MlmConditional, UnmaskedPositionIsRejected) {
  const auto m = test::zero_model(2, 2);
  try {
    (void)mlm_conditional(m, apply_mask(Sequence({0, 0}, m.vocab()), {0}, m.vocab()), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PositionNotMasked);
  }
}

TEST(Softmax, ShiftInvariantAndNormalized) {
  const std::vector<double> row{0.3, -1.2, 2.5, 0.0};
  for (double c : {-1000.0, -3.0, 0.0, 7.5, 1000.0}) {
    std::vector<double> shifted = row;
    for (auto& v : shifted) v += c;
    const auto a = softmax(row);
    const auto b = softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      EXPECT_NEAR(a[static_cast<Token>(i)], b[static_cast<Token>(i)], 1e-12);
      sum += b[static_cast<Token>(i)];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Softmax, ConditionalsSumToOneAcrossViews) {
  const auto m = TabularMLM::generate(13, 4, 3, 6.0);
  const Vocab& v = m.vocab();
  for (std::uint64_t i = 0; i < 64; i += 5) {
    const auto s = decode_state(i, 3, v);
    for (const std::vector<Position>& mask : {std::vector<Position>{0}, {1, 2}, {0, 1, 2}}) {
      const auto view = apply_mask(s, mask, v);
      for (Position p : mask) {
        const auto d = mlm_conditional(m, view, p);
        double sum = 0.0;
        for (double q : d.probs()) sum += q;
        EXPECT_NEAR(sum, 1.0, 1e-9);
      }
    }
  }
}

TEST(LogSumExp, StableForLargeValues) {
  const std::vector<double> v{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
}

TEST(CategoricalDist, ZeroMassLogProbIsMinusInfinity) {
  const CategoricalDist d({0.5, 0.5, 0.0});
  EXPECT_EQ(d.log_prob(2), -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(d.log_prob(0), std::log(0.5), 1e-15);
}

class BrokenScorer final : public Scorer {
 public:
  explicit BrokenScorer(int mode) : mode_(mode), vocab_(2) {}
  const Vocab& vocab() const override { return vocab_; }
  std::size_t length() const override { return 2; }
  std::vector<PositionLogits> positional_logits(const MaskedView& view) const override {
    std::vector<PositionLogits> out;
    for (Position p : view.masked()) out.push_back({p, {0.0, 0.0}});
    if (mode_ == 0) out.clear();
    if (mode_ == 1) out[0].logits.push_back(1.0);
    if (mode_ == 2) out[0].logits[1] = std::nan("");
    if (mode_ == 3) out[0].position = 1 - out[0].position;
    return out;
  }

 private:
  int mode_;
  Vocab vocab_;
};

TEST(CheckedLogits, MalformedRowsAreScorerFailures) {
  for (int mode = 0; mode < 4; ++mode) {
    const BrokenScorer m(mode);
    try {
      (void)energy_raw(m, Sequence({0, 1}, m.vocab()));
      ADD_FAILURE() << "mode " << mode;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::ScorerFailure) << "mode " << mode;
    }
  }
}

}  // namespace
}  // namespace seqmc
