#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqmc/energy.hpp"
#include "seqmc/proposal.hpp"
#include "seqmc/random.hpp"
#include "seqmc/trace.hpp"

namespace seqmc {

/// Current state of one chain. `energies` always describe `current`; the
/// target energy is the one selected by `kind`.
struct ChainState {
  Sequence current;
  EnergyPair energies;
  EnergyKind kind = EnergyKind::raw;
  std::size_t epoch = 0;
  std::size_t step = 0;
  double target_temp = 1.0;
  RandomStream rng;

  Energy current_energy() const noexcept { return energies.get(kind); }
};

ChainState make_chain_state(const Scorer& model, Sequence start, EnergyKind kind, RandomStream rng,
                            double target_temp = 1.0);

/// Recomputes the energy of `state.current` from scratch and compares it with
/// the cached value.
bool energy_cache_coherent(const Scorer& model, const ChainState& state, double tolerance = 1e-9);

/// One Metropolis-Hastings accept/reject of `proposal` (built from
/// state.current). The energy ratio is divided by the target temperature; the
/// proposal ratio is not. Exactly one uniform is drawn from state.rng. If the
/// scorer throws, `state` is left untouched.
///
/// `force_accept` skips the test and records acceptance 1. It breaks detailed
/// balance and exists only for the optional early-epoch accept-all trick.
StepOutcome mh_step(const Scorer& model, ChainState& state, const Proposal& proposal,
                    bool force_accept = false);

/// Resample from the masked conditional(s) and always move. Energies are
/// refreshed for diagnostics only.
StepOutcome degenerate_gibbs_step(const Scorer& model, ChainState& state, Position pos,
                                  const ProposalSettings& settings);
StepOutcome degenerate_gibbs_step(const Scorer& model, ChainState& state,
                                  std::span<const Position> positions,
                                  const ProposalSettings& settings);

enum class WarmStart { greedy, sample_all };

/// Fill an all-mask sequence left to right, each position conditioned on the
/// tokens placed so far with the rest still masked. Greedy takes the argmax
/// (lowest id on ties); sample_all draws from the free conditional.
Sequence warm_start(const Scorer& model, std::size_t length, WarmStart mode, RandomStream& rng);

struct AnnealSchedule {
  double initial = 1.0;
  double rate = 0.02;
  double floor = 0.05;
};

/// max(floor, initial - rate * epoch)
double anneal_temperature(std::size_t epoch, const AnnealSchedule& schedule);

enum class SamplerKind { mh, degenerate_gibbs };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::mh;
  EnergyKind energy = EnergyKind::raw;
  ProposalSettings proposal;
  /// Empty means single-position steps.
  std::optional<BlockPolicy> block;
  ScanOrder scan = ScanOrder::random;
  WarmStart warm = WarmStart::greedy;
  /// 0 means the scorer's own length.
  std::size_t length = 0;
  /// Total epochs, burn-in included.
  std::size_t epochs = 26;
  std::size_t burn_in = 7;
  double target_temp = 1.0;
  std::optional<AnnealSchedule> anneal;
  /// Epochs after the warm start during which every MH proposal is accepted.
  std::size_t forced_accept_epochs = 0;
  /// Record the energy that is not the target in the trace as well.
  bool track_both_energies = false;
  bool include_burn_in_metrics = false;
  bool collect_samples = true;

  void validate(const Scorer& model) const;
  std::size_t resolved_length(const Scorer& model) const noexcept;
};

struct ChainResult {
  Sequence final_state;
  /// State after every post-burn-in step.
  std::vector<Sequence> samples;
  Trace trace;
};

ChainResult run_chain(const Scorer& model, const SamplerConfig& config, RandomStream rng,
                      std::size_t chain_id = 0);

}  // namespace seqmc
