#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace seqmc {

using Token = std::uint32_t;
using Position = std::size_t;

/// Ordinary tokens are [0, size); the mask sentinel is the single id `size`.
class Vocab {
 public:
  explicit Vocab(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  Token mask_id() const noexcept { return static_cast<Token>(size_); }
  bool contains(Token id) const noexcept { return id < size_; }

  friend bool operator==(const Vocab&, const Vocab&) = default;

 private:
  std::size_t size_;
};

/// A finalized, fixed-length token string. Never holds the mask sentinel.
class Sequence {
 public:
  Sequence(std::vector<Token> tokens, const Vocab& vocab);

  std::span<const Token> tokens() const noexcept { return tokens_; }
  std::size_t length() const noexcept { return tokens_.size(); }
  Token operator[](Position pos) const { return tokens_.at(pos); }

  /// Copy with one position replaced; the new token is validated against the
  /// vocabulary the sequence was built with.
  Sequence with_token(Position pos, Token id) const;

  friend bool operator==(const Sequence&, const Sequence&) = default;

 private:
  std::vector<Token> tokens_;
  std::size_t vocab_size_ = 0;
};

/// A sequence with some positions hidden behind the mask sentinel. The base
/// sequence is held by value and never modified.
class MaskedView {
 public:
  MaskedView(Sequence base, std::vector<Position> masked, const Vocab& vocab);

  const Sequence& base() const noexcept { return base_; }
  /// Sorted, duplicate-free.
  std::span<const Position> masked() const noexcept { return masked_; }
  std::size_t length() const noexcept { return base_.length(); }
  Token mask_id() const noexcept { return mask_id_; }

  bool is_masked(Position pos) const noexcept;
  Token operator[](Position pos) const;
  /// Token string as the scorer sees it (mask_id at masked slots).
  std::vector<Token> tokens() const;

 private:
  Sequence base_;
  std::vector<Position> masked_;
  Token mask_id_;
};

MaskedView apply_mask(const Sequence& seq, std::vector<Position> positions, const Vocab& vocab);

/// Big-endian base-|V| index of a token string (position 0 most significant).
std::uint64_t encode_state(std::span<const Token> tokens, std::size_t vocab_size);
Sequence decode_state(std::uint64_t index, std::size_t length, const Vocab& vocab);

}  // namespace seqmc
