#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqmc/energy.hpp"

namespace seqmc {

/// Result of one sampler step. `novel` means accepted and different from the
/// previous state.
struct StepOutcome {
  bool accepted = false;
  bool novel = false;
  double acceptance_prob = 0.0;
  double energy_old = 0.0;
  double energy_new = 0.0;
  double log_q_fwd = 0.0;
  double log_q_rev = 0.0;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

/// Where a step sits in the run, plus the energies of the state it left the
/// chain in. An energy the run does not track is left empty.
struct StepContext {
  std::size_t chain_id = 0;
  std::size_t epoch = 0;
  std::size_t step = 0;
  bool burn_in = false;
  std::optional<double> energy_raw;
  std::optional<double> energy_norm;
  double target_temp = 1.0;

  friend bool operator==(const StepContext&, const StepContext&) = default;
};

struct StepRecord {
  StepContext context;
  StepOutcome outcome;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EpochEnergy {
  std::size_t epoch = 0;
  std::optional<double> mean_raw;
  std::optional<double> mean_norm;
};

class Trace {
 public:
  /// Burn-in steps are kept in the record list but left out of the rates
  /// unless `include_burn_in` is set.
  explicit Trace(bool include_burn_in = false) : include_burn_in_(include_burn_in) {}

  void record_step(const StepOutcome& outcome, const StepContext& context);

  std::span<const StepRecord> steps() const noexcept { return steps_; }
  bool include_burn_in() const noexcept { return include_burn_in_; }

  std::size_t counted_steps() const noexcept { return counted_; }
  std::size_t accepted_steps() const noexcept { return accepted_; }
  std::size_t novel_steps() const noexcept { return novel_; }
  double acceptance_rate() const noexcept;
  double novel_rate() const noexcept;

  /// Mean energies of every epoch, burn-in included, in epoch order.
  std::vector<EpochEnergy> epoch_energies() const;

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  std::vector<StepRecord> steps_;
  bool include_burn_in_;
  std::size_t counted_ = 0;
  std::size_t accepted_ = 0;
  std::size_t novel_ = 0;
};

}  // namespace seqmc
