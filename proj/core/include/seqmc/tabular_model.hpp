#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "seqmc/energy.hpp"

namespace seqmc {

/// Number of (position, context) rows a tabular model of this shape needs,
/// T * |V|^(T-1). Throws StateSpaceTooLarge past `cap`.
std::uint64_t tabular_row_count(std::size_t vocab_size, std::size_t length, std::uint64_t cap);

/// A total lookup table from (position t, context with t removed) to a logit
/// row. Stands in for a pretrained masked language model at toy scale.
///
/// Rows are stored row-major at index t * |V|^(T-1) + context_key, where the
/// context key is the big-endian base-|V| integer of the other T-1 tokens in
/// position order.
///
/// When a view masks several positions, the row for t averages the stored
/// rows over every filling of the other masked positions. That keeps the
/// table total for block proposals and the partially masked warm start
/// without storing rows for masked contexts.
class TabularMLM final : public Scorer {
 public:
  static constexpr std::uint64_t kDefaultRowCap = 10'000'000;
  static constexpr std::uint32_t kFormatVersion = 1;

  /// `table` holds row_count * vocab.size() logits.
  TabularMLM(Vocab vocab, std::size_t length, std::vector<double> table, std::uint64_t seed = 0,
             double scale = 0.0);

  /// Deterministic pseudo-random logits in [-scale, scale], one counter-based
  /// draw per (seed, position, context, token).
  static TabularMLM generate(std::uint64_t seed, std::size_t vocab_size, std::size_t length,
                             double scale, std::uint64_t row_cap = kDefaultRowCap);

  /// Build row by row. The callback receives the position and a full
  /// sequence whose other positions spell the context (position t holds 0).
  using RowFunction = std::function<LogitRow(Position, const Sequence&)>;
  static TabularMLM from_function(const Vocab& vocab, std::size_t length, const RowFunction& fn,
                                  std::uint64_t row_cap = kDefaultRowCap);

  static TabularMLM load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const Vocab& vocab() const override { return vocab_; }
  std::size_t length() const override { return length_; }
  std::vector<PositionLogits> positional_logits(const MaskedView& view) const override;

  std::uint64_t seed() const noexcept { return seed_; }
  double scale() const noexcept { return scale_; }
  std::uint64_t row_count() const noexcept { return rows_per_position_ * length_; }
  std::span<const double> table() const noexcept { return table_; }
  std::span<const double> row(Position pos, std::uint64_t context_key) const;
  /// Context key of `tokens` with `pos` removed.
  std::uint64_t context_key(std::span<const Token> tokens, Position pos) const;

  friend bool operator==(const TabularMLM& a, const TabularMLM& b) {
    return a.vocab_ == b.vocab_ && a.length_ == b.length_ && a.seed_ == b.seed_ &&
           a.scale_ == b.scale_ && a.table_ == b.table_;
  }

 private:
  Vocab vocab_;
  std::size_t length_;
  std::uint64_t rows_per_position_;
  std::vector<double> table_;
  std::uint64_t seed_;
  double scale_;
};

}  // namespace seqmc
