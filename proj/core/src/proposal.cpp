#include "seqmc/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "seqmc/error.hpp"

namespace seqmc {

void ProposalSettings::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(Errc::NonPositiveTemperature, "proposal temperature must be positive, got " +
                                                  std::to_string(temperature));
  }
  if (!(nucleus > 0.0 && nucleus <= 1.0)) {
    throw Error(Errc::InvalidBoundary, "nucleus boundary must lie in (0, 1], got " +
                                           std::to_string(nucleus));
  }
}

CategoricalDist temper(std::span<const double> row, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(Errc::NonPositiveTemperature, "temperature " + std::to_string(temperature));
  }
  if (temperature == 1.0) return softmax(row);
  std::vector<double> scaled(row.begin(), row.end());
  for (double& v : scaled) v /= temperature;
  return softmax(scaled);
}

CategoricalDist nucleus_truncate(const CategoricalDist& dist, double boundary) {
  if (!(boundary > 0.0 && boundary <= 1.0)) {
    throw Error(Errc::InvalidBoundary, "nucleus boundary " + std::to_string(boundary));
  }
  if (boundary == 1.0) return dist;
  const auto probs = dist.probs();
  std::vector<Token> order(probs.size());
  std::iota(order.begin(), order.end(), Token{0});
  // Ties resolved by ascending token id.
  std::stable_sort(order.begin(), order.end(),
                   [&](Token a, Token b) { return probs[a] > probs[b]; });
  std::vector<double> kept(probs.size(), 0.0);
  double mass = 0.0;
  for (Token id : order) {
    kept[id] = probs[id];
    mass += probs[id];
    if (mass >= boundary) break;
  }
  for (double& p : kept) p /= mass;
  return CategoricalDist(std::move(kept));
}

CategoricalDist proposal_distribution(std::span<const double> row,
                                      const ProposalSettings& settings) {
  return nucleus_truncate(temper(row, settings.temperature), settings.nucleus);
}

std::vector<CategoricalDist> block_distributions(const Scorer& model, const MaskedView& view,
                                                 const ProposalSettings& settings) {
  std::vector<CategoricalDist> dists;
  for (const auto& row : checked_logits(model, view)) {
    dists.push_back(proposal_distribution(row.logits, settings));
  }
  return dists;
}

Proposal propose_block(const Scorer& model, const Sequence& state,
                       std::span<const Position> positions, const ProposalSettings& settings,
                       RandomStream& rng) {
  settings.validate();
  if (positions.empty()) throw Error(Errc::PositionOutOfRange, "block proposal needs positions");
  const MaskedView view(state, {positions.begin(), positions.end()}, model.vocab());
  const auto dists = block_distributions(model, view, settings);

  std::vector<Token> tokens(state.tokens().begin(), state.tokens().end());
  Proposal out{state, 0.0, 0.0, {}, {view.masked().begin(), view.masked().end()}};
  for (std::size_t i = 0; i < out.masked.size(); ++i) {
    const Position pos = out.masked[i];
    const Token old_token = state[pos];
    const auto new_token = static_cast<Token>(rng.categorical(dists[i].probs()));
    out.log_q_fwd += dists[i].log_prob(new_token);
    out.log_q_rev += dists[i].log_prob(old_token);
    tokens[pos] = new_token;
    if (new_token != old_token) out.changed.push_back(pos);
  }
  out.candidate = Sequence(std::move(tokens), model.vocab());
  return out;
}

Proposal propose_single(const Scorer& model, const Sequence& state, Position pos,
                        const ProposalSettings& settings, RandomStream& rng) {
  const Position one[] = {pos};
  return propose_block(model, state, one, settings, rng);
}

std::vector<Position> position_schedule(std::size_t length, ScanOrder order, RandomStream& rng) {
  std::vector<Position> positions(length);
  std::iota(positions.begin(), positions.end(), Position{0});
  if (order == ScanOrder::random) rng.shuffle(std::span<Position>(positions));
  return positions;
}

std::size_t block_schedule(std::size_t epoch, std::size_t total_epochs, std::size_t length,
                           const BlockPolicy& policy) {
  if (policy.mode == BlockPolicy::Mode::fixed) {
    return std::clamp<std::size_t>(policy.fixed_size, 1, length);
  }
  const double remaining =
      1.0 - static_cast<double>(epoch) / static_cast<double>(std::max<std::size_t>(total_epochs, 1));
  const long size = std::lround(policy.initial_fraction * static_cast<double>(length) * remaining);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1L, size)), 1, length);
}

}  // namespace seqmc
