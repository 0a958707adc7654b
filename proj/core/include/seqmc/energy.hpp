#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqmc/sequence.hpp"

namespace seqmc {

/// Log-potentials over ordinary tokens at one masked position. The mask
/// sentinel has no entry.
using LogitRow = std::vector<double>;

struct PositionLogits {
  Position position;
  LogitRow logits;
};

/// Anything that can score masked positions: the tabular toy model, or a
/// remote process serving a real masked language model.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual const Vocab& vocab() const = 0;
  /// Sequence length the scorer serves (fixed for tabular models, an upper
  /// bound for remote ones).
  virtual std::size_t length() const = 0;
  /// One row per masked position of `view`, in ascending position order, each
  /// conditioned on the view with every masked position hidden at once.
  virtual std::vector<PositionLogits> positional_logits(const MaskedView& view) const = 0;
};

/// Probabilities over ordinary tokens [0, vocab.size).
class CategoricalDist {
 public:
  explicit CategoricalDist(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](Token id) const { return probs_.at(id); }
  /// -inf for tokens with zero mass.
  double log_prob(Token id) const;

 private:
  std::vector<double> probs_;
};

double log_sum_exp(std::span<const double> values);
/// Max-subtracted softmax.
CategoricalDist softmax(std::span<const double> logits);

enum class EnergyKind { raw, norm };

struct Energy {
  double value = 0.0;
  EnergyKind kind = EnergyKind::raw;
};

/// Both parametrizations share the same T single-mask forward passes, so the
/// sampler can track the one it does not target at no extra scorer cost.
struct EnergyPair {
  Energy raw;
  Energy norm;

  const Energy& get(EnergyKind kind) const noexcept { return kind == EnergyKind::raw ? raw : norm; }
};

/// positional_logits with the row count, order, width and finiteness
/// verified; any violation is a ScorerFailure.
std::vector<PositionLogits> checked_logits(const Scorer& model, const MaskedView& view);

/// Row at `pos` with only `pos` masked.
LogitRow single_mask_row(const Scorer& model, const Sequence& seq, Position pos);

Energy energy_raw(const Scorer& model, const Sequence& seq);
Energy energy_norm(const Scorer& model, const Sequence& seq);
Energy energy(const Scorer& model, const Sequence& seq, EnergyKind kind);
EnergyPair energy_pair(const Scorer& model, const Sequence& seq);

/// Softmax of the row at `pos` under `view`; `pos` must be masked.
CategoricalDist mlm_conditional(const Scorer& model, const MaskedView& view, Position pos);

}  // namespace seqmc
