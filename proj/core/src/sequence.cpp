#include "seqmc/sequence.hpp"

#include <algorithm>
#include <string>

#include "seqmc/error.hpp"

namespace seqmc {

Vocab::Vocab(std::size_t size) : size_(size) {
  if (size < 2) {
    throw Error(Errc::InvalidVocab, "vocabulary needs at least 2 tokens, got " + std::to_string(size));
  }
}

Sequence::Sequence(std::vector<Token> tokens, const Vocab& vocab)
    : tokens_(std::move(tokens)), vocab_size_(vocab.size()) {
  if (tokens_.empty()) throw Error(Errc::EmptySequence, "sequence must hold at least one token");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!vocab.contains(tokens_[i])) {
      throw Error(Errc::TokenOutOfRange,
                  "position " + std::to_string(i) + " holds id " + std::to_string(tokens_[i]));
    }
  }
}

Sequence Sequence::with_token(Position pos, Token id) const {
  if (pos >= tokens_.size()) {
    throw Error(Errc::PositionOutOfRange, "position " + std::to_string(pos));
  }
  if (id >= vocab_size_) {
    throw Error(Errc::TokenOutOfRange,
                "position " + std::to_string(pos) + " holds id " + std::to_string(id));
  }
  Sequence out = *this;
  out.tokens_[pos] = id;
  return out;
}

MaskedView::MaskedView(Sequence base, std::vector<Position> masked, const Vocab& vocab)
    : base_(std::move(base)), masked_(std::move(masked)), mask_id_(vocab.mask_id()) {
  std::sort(masked_.begin(), masked_.end());
  masked_.erase(std::unique(masked_.begin(), masked_.end()), masked_.end());
  if (!masked_.empty() && masked_.back() >= base_.length()) {
    throw Error(Errc::PositionOutOfRange, "mask position " + std::to_string(masked_.back()) +
                                              " outside length " + std::to_string(base_.length()));
  }
}

bool MaskedView::is_masked(Position pos) const noexcept {
  return std::binary_search(masked_.begin(), masked_.end(), pos);
}

Token MaskedView::operator[](Position pos) const {
  if (pos >= base_.length()) throw Error(Errc::PositionOutOfRange, "position " + std::to_string(pos));
  return is_masked(pos) ? mask_id_ : base_[pos];
}

std::vector<Token> MaskedView::tokens() const {
  std::vector<Token> out(base_.tokens().begin(), base_.tokens().end());
  for (Position p : masked_) out[p] = mask_id_;
  return out;
}

MaskedView apply_mask(const Sequence& seq, std::vector<Position> positions, const Vocab& vocab) {
  return MaskedView(seq, std::move(positions), vocab);
}

std::uint64_t encode_state(std::span<const Token> tokens, std::size_t vocab_size) {
  std::uint64_t index = 0;
  for (Token t : tokens) index = index * vocab_size + t;
  return index;
}

Sequence decode_state(std::uint64_t index, std::size_t length, const Vocab& vocab) {
  std::vector<Token> tokens(length);
  for (std::size_t i = length; i-- > 0;) {
    tokens[i] = static_cast<Token>(index % vocab.size());
    index /= vocab.size();
  }
  return Sequence(std::move(tokens), vocab);
}

}  // namespace seqmc
