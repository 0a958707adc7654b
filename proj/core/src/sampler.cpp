#include "seqmc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seqmc/error.hpp"

namespace seqmc {

ChainState make_chain_state(const Scorer& model, Sequence start, EnergyKind kind, RandomStream rng,
                            double target_temp) {
  if (!(target_temp > 0.0)) {
    throw Error(Errc::NonPositiveTemperature, "target temperature " + std::to_string(target_temp));
  }
  EnergyPair energies = energy_pair(model, start);
  return ChainState{std::move(start), energies, kind, 0, 0, target_temp, std::move(rng)};
}

bool energy_cache_coherent(const Scorer& model, const ChainState& state, double tolerance) {
  const EnergyPair fresh = energy_pair(model, state.current);
  return std::abs(fresh.raw.value - state.energies.raw.value) <= tolerance &&
         std::abs(fresh.norm.value - state.energies.norm.value) <= tolerance;
}

StepOutcome mh_step(const Scorer& model, ChainState& state, const Proposal& proposal,
                    bool force_accept) {
  const double e_old = state.current_energy().value;
  const bool moves = !proposal.changed.empty();
  // Scorer calls happen before any mutation.
  const EnergyPair candidate = moves ? energy_pair(model, proposal.candidate) : state.energies;
  const double e_new = candidate.get(state.kind).value;

  double log_accept = -std::numeric_limits<double>::infinity();
  if (proposal.log_q_rev != -std::numeric_limits<double>::infinity()) {
    log_accept = std::min(
        0.0, (e_old - e_new) / state.target_temp + proposal.log_q_rev - proposal.log_q_fwd);
  }
  const double u = state.rng.uniform();
  const bool accepted = force_accept || std::log(u) <= log_accept;

  StepOutcome out;
  out.accepted = accepted;
  out.novel = accepted && moves;
  out.acceptance_prob = force_accept ? 1.0 : std::exp(log_accept);
  out.energy_old = e_old;
  out.energy_new = e_new;
  out.log_q_fwd = proposal.log_q_fwd;
  out.log_q_rev = proposal.log_q_rev;
  if (accepted) {
    state.current = proposal.candidate;
    state.energies = candidate;
  }
  ++state.step;
  return out;
}

StepOutcome degenerate_gibbs_step(const Scorer& model, ChainState& state,
                                  std::span<const Position> positions,
                                  const ProposalSettings& settings) {
  RandomStream rng = state.rng;
  const Proposal proposal = propose_block(model, state.current, positions, settings, rng);
  const bool moves = !proposal.changed.empty();
  const EnergyPair candidate = moves ? energy_pair(model, proposal.candidate) : state.energies;

  StepOutcome out;
  out.accepted = true;
  out.novel = moves;
  out.acceptance_prob = 1.0;
  out.energy_old = state.current_energy().value;
  out.energy_new = candidate.get(state.kind).value;
  out.log_q_fwd = proposal.log_q_fwd;
  out.log_q_rev = proposal.log_q_rev;
  state.current = proposal.candidate;
  state.energies = candidate;
  state.rng = rng;
  ++state.step;
  return out;
}

StepOutcome degenerate_gibbs_step(const Scorer& model, ChainState& state, Position pos,
                                  const ProposalSettings& settings) {
  const Position one[] = {pos};
  return degenerate_gibbs_step(model, state, one, settings);
}

Sequence warm_start(const Scorer& model, std::size_t length, WarmStart mode, RandomStream& rng) {
  if (length == 0) throw Error(Errc::EmptySequence, "warm start needs a positive length");
  const Vocab& vocab = model.vocab();
  Sequence filled(std::vector<Token>(length, 0), vocab);
  for (Position t = 0; t < length; ++t) {
    std::vector<Position> still_masked;
    for (Position p = t; p < length; ++p) still_masked.push_back(p);
    const MaskedView view(filled, std::move(still_masked), vocab);
    const auto rows = checked_logits(model, view);
    const LogitRow& row = rows.front().logits;
    Token choice = 0;
    if (mode == WarmStart::greedy) {
      choice = static_cast<Token>(std::max_element(row.begin(), row.end()) - row.begin());
    } else {
      choice = static_cast<Token>(rng.categorical(softmax(row).probs()));
    }
    filled = filled.with_token(t, choice);
  }
  return filled;
}

double anneal_temperature(std::size_t epoch, const AnnealSchedule& schedule) {
  return std::max(schedule.floor, schedule.initial - schedule.rate * static_cast<double>(epoch));
}

std::size_t SamplerConfig::resolved_length(const Scorer& model) const noexcept {
  return length == 0 ? model.length() : length;
}

void SamplerConfig::validate(const Scorer& model) const {
  auto fail = [](const std::string& what) { throw Error(Errc::ConfigInvalid, what); };
  proposal.validate();
  const std::size_t t = resolved_length(model);
  if (t == 0 || t > model.length()) fail("sequence length must lie in [1, scorer length]");
  if (epochs == 0) fail("epochs must be at least 1");
  if (burn_in >= epochs) fail("burn_in must be smaller than epochs");
  if (!(target_temp > 0.0)) fail("target temperature must be positive");
  if (anneal) {
    if (!(anneal->floor > 0.0) || !(anneal->initial >= anneal->floor) || anneal->rate < 0.0) {
      fail("anneal schedule needs 0 < floor <= initial and rate >= 0");
    }
  }
  if (block) {
    if (block->mode == BlockPolicy::Mode::fixed && block->fixed_size == 0) {
      fail("fixed block size must be at least 1");
    }
    if (!(block->initial_fraction > 0.0 && block->initial_fraction <= 1.0)) {
      fail("block initial fraction must lie in (0, 1]");
    }
  }
}

ChainResult run_chain(const Scorer& model, const SamplerConfig& config, RandomStream rng,
                      std::size_t chain_id) {
  config.validate(model);
  const std::size_t length = config.resolved_length(model);
  Sequence start = warm_start(model, length, config.warm, rng);
  ChainState state = make_chain_state(model, std::move(start), config.energy, std::move(rng),
                                      config.target_temp);

  ChainResult result{state.current, {}, Trace(config.include_burn_in_metrics)};
  const bool track_raw = config.track_both_energies || config.energy == EnergyKind::raw;
  const bool track_norm = config.track_both_energies || config.energy == EnergyKind::norm;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    state.epoch = epoch;
    if (config.anneal) state.target_temp = anneal_temperature(epoch, *config.anneal);
    const bool burn_in = epoch < config.burn_in;
    const bool force = epoch < config.forced_accept_epochs;

    const std::vector<Position> order = position_schedule(length, config.scan, state.rng);
    const std::size_t block_size =
        config.block ? block_schedule(epoch, config.epochs, length, *config.block) : 1;

    for (std::size_t begin = 0; begin < length; begin += block_size) {
      const std::span<const Position> positions(
          order.data() + begin, std::min(block_size, length - begin));
      const std::size_t step_index = state.step;
      StepOutcome outcome;
      if (config.kind == SamplerKind::mh) {
        const Proposal proposal =
            propose_block(model, state.current, positions, config.proposal, state.rng);
        outcome = mh_step(model, state, proposal, force);
      } else {
        outcome = degenerate_gibbs_step(model, state, positions, config.proposal);
      }
      StepContext context;
      context.chain_id = chain_id;
      context.epoch = epoch;
      context.step = step_index;
      context.burn_in = burn_in;
      if (track_raw) context.energy_raw = state.energies.raw.value;
      if (track_norm) context.energy_norm = state.energies.norm.value;
      context.target_temp = state.target_temp;
      result.trace.record_step(outcome, context);
      if (!burn_in && config.collect_samples) result.samples.push_back(state.current);
    }
  }
  result.final_state = state.current;
  return result;
}

}  // namespace seqmc
