#include "seqmc/trace.hpp"

#include <map>

namespace seqmc {

void Trace::record_step(const StepOutcome& outcome, const StepContext& context) {
  steps_.push_back({context, outcome});
  if (context.burn_in && !include_burn_in_) return;
  ++counted_;
  if (outcome.accepted) ++accepted_;
  if (outcome.accepted && outcome.novel) ++novel_;
}

double Trace::acceptance_rate() const noexcept {
  return counted_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(counted_);
}

double Trace::novel_rate() const noexcept {
  return counted_ == 0 ? 0.0 : static_cast<double>(novel_) / static_cast<double>(counted_);
}

std::vector<EpochEnergy> Trace::epoch_energies() const {
  struct Sums {
    double raw = 0.0;
    double norm = 0.0;
    std::size_t raw_n = 0;
    std::size_t norm_n = 0;
  };
  std::map<std::size_t, Sums> by_epoch;
  for (const auto& rec : steps_) {
    auto& s = by_epoch[rec.context.epoch];
    if (rec.context.energy_raw) {
      s.raw += *rec.context.energy_raw;
      ++s.raw_n;
    }
    if (rec.context.energy_norm) {
      s.norm += *rec.context.energy_norm;
      ++s.norm_n;
    }
  }
  std::vector<EpochEnergy> out;
  for (const auto& [epoch, s] : by_epoch) {
    EpochEnergy e{epoch, std::nullopt, std::nullopt};
    if (s.raw_n > 0) e.mean_raw = s.raw / static_cast<double>(s.raw_n);
    if (s.norm_n > 0) e.mean_norm = s.norm / static_cast<double>(s.norm_n);
    out.push_back(e);
  }
  return out;
}

}  // namespace seqmc
