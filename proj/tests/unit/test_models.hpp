#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "seqmc/tabular_model.hpp"

namespace seqmc::test {

inline TabularMLM zero_model(std::size_t vocab, std::size_t length) {
  return TabularMLM::from_function(Vocab(vocab), length,
                                   [vocab](Position, const Sequence&) { return LogitRow(vocab, 0.0); });
}

inline TabularMLM constant_row_model(const LogitRow& row, std::size_t length) {
  return TabularMLM::from_function(Vocab(row.size()), length,
                                   [row](Position, const Sequence&) { return row; });
}

/// Logits that are already log-probabilities of an arbitrary context-dependent
/// distribution, so every row has log-sum-exp zero.
inline TabularMLM log_normalized_model(std::uint64_t seed, std::size_t vocab, std::size_t length) {
  const auto base = TabularMLM::generate(seed, vocab, length, 2.0);
  return TabularMLM::from_function(Vocab(vocab), length, [&base](Position t, const Sequence& s) {
    const auto key = base.context_key(s.tokens(), t);
    const auto raw = base.row(t, key);
    double m = raw[0];
    for (double v : raw) m = std::max(m, v);
    double z = 0.0;
    for (double v : raw) z += std::exp(v - m);
    LogitRow out;
    for (double v : raw) out.push_back(v - m - std::log(z));
    return out;
  });
}

/// Position-dependent logits without a table, for long sequences.
class AnalyticScorer final : public Scorer {
 public:
  AnalyticScorer(std::size_t vocab, std::size_t length) : vocab_(vocab), length_(length) {}
  const Vocab& vocab() const override { return vocab_; }
  std::size_t length() const override { return length_; }
  std::vector<PositionLogits> positional_logits(const MaskedView& view) const override {
    std::vector<PositionLogits> out;
    for (Position p : view.masked()) {
      LogitRow row(vocab_.size());
      const Token left = p > 0 && !view.is_masked(p - 1) ? view[p - 1] : 0;
      for (Token w = 0; w < vocab_.size(); ++w) row[w] = std::sin(0.7 * p + 1.3 * w + 0.4 * left);
      out.push_back({p, std::move(row)});
    }
    return out;
  }

 private:
  Vocab vocab_;
  std::size_t length_;
};

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "seqmc-test-XXXXXX").string();
    path_ = ::mkdtemp(pattern.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace seqmc::test
