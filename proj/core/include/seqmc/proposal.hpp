#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqmc/energy.hpp"
#include "seqmc/random.hpp"
#include "seqmc/sequence.hpp"

namespace seqmc {

/// Entropy controls applied to a masked conditional before it is used as a
/// proposal: temperature first, then nucleus truncation.
struct ProposalSettings {
  double temperature = 1.0;
  double nucleus = 1.0;

  void validate() const;
};

struct Proposal {
  Sequence candidate;
  double log_q_fwd = 0.0;
  /// -inf when an old token fell outside the nucleus.
  double log_q_rev = 0.0;
  /// Positions where the candidate differs from the source.
  std::vector<Position> changed;
  /// Positions that were masked to build the proposal.
  std::vector<Position> masked;
};

struct BlockPolicy {
  enum class Mode { fixed, annealed };

  Mode mode = Mode::fixed;
  std::size_t fixed_size = 1;
  double initial_fraction = 0.5;
};

CategoricalDist temper(std::span<const double> row, double temperature);
CategoricalDist nucleus_truncate(const CategoricalDist& dist, double boundary);
/// temper, then nucleus_truncate.
CategoricalDist proposal_distribution(std::span<const double> row, const ProposalSettings& settings);

/// Per-position proposal distributions for one jointly masked block, in the
/// order of `view.masked()`.
std::vector<CategoricalDist> block_distributions(const Scorer& model, const MaskedView& view,
                                                 const ProposalSettings& settings);

Proposal propose_single(const Scorer& model, const Sequence& state, Position pos,
                        const ProposalSettings& settings, RandomStream& rng);
Proposal propose_block(const Scorer& model, const Sequence& state,
                       std::span<const Position> positions, const ProposalSettings& settings,
                       RandomStream& rng);

enum class ScanOrder { left_to_right, random };

std::vector<Position> position_schedule(std::size_t length, ScanOrder order, RandomStream& rng);
std::size_t block_schedule(std::size_t epoch, std::size_t total_epochs, std::size_t length,
                           const BlockPolicy& policy);

}  // namespace seqmc
