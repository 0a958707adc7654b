#include "seqmc/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seqmc/error.hpp"

namespace seqmc {

namespace {

void check_scorer_rows(const std::vector<PositionLogits>& rows, const MaskedView& view,
                       std::size_t vocab_size) {
  const auto masked = view.masked();
  if (rows.size() != masked.size()) {
    throw Error(Errc::ScorerFailure, "scorer returned " + std::to_string(rows.size()) +
                                         " rows for " + std::to_string(masked.size()) +
                                         " masked positions");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].position != masked[i] || rows[i].logits.size() != vocab_size) {
      throw Error(Errc::ScorerFailure, "scorer row " + std::to_string(i) + " has wrong shape");
    }
    for (double v : rows[i].logits) {
      if (!std::isfinite(v)) throw Error(Errc::ScorerFailure, "scorer returned a non-finite logit");
    }
  }
}

}  // namespace

std::vector<PositionLogits> checked_logits(const Scorer& model, const MaskedView& view) {
  auto rows = model.positional_logits(view);
  check_scorer_rows(rows, view, model.vocab().size());
  return rows;
}

CategoricalDist::CategoricalDist(std::vector<double> probs) : probs_(std::move(probs)) {}

double CategoricalDist::log_prob(Token id) const {
  const double p = probs_.at(id);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

CategoricalDist softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - peak);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return CategoricalDist(std::move(probs));
}

LogitRow single_mask_row(const Scorer& model, const Sequence& seq, Position pos) {
  const MaskedView view(seq, {pos}, model.vocab());
  return std::move(checked_logits(model, view).front().logits);
}

EnergyPair energy_pair(const Scorer& model, const Sequence& seq) {
  double raw = 0.0;
  double norm = 0.0;
  for (Position t = 0; t < seq.length(); ++t) {
    const LogitRow row = single_mask_row(model, seq, t);
    const double observed = row[seq[t]];
    raw -= observed;
    norm -= observed - log_sum_exp(row);
  }
  // Rounding can leave a perfectly peaked model a hair below zero.
  return {{raw, EnergyKind::raw}, {std::max(norm, 0.0), EnergyKind::norm}};
}

Energy energy_raw(const Scorer& model, const Sequence& seq) {
  return energy_pair(model, seq).raw;
}

Energy energy_norm(const Scorer& model, const Sequence& seq) {
  return energy_pair(model, seq).norm;
}

Energy energy(const Scorer& model, const Sequence& seq, EnergyKind kind) {
  return energy_pair(model, seq).get(kind);
}

CategoricalDist mlm_conditional(const Scorer& model, const MaskedView& view, Position pos) {
  if (!view.is_masked(pos)) {
    throw Error(Errc::PositionNotMasked, "position " + std::to_string(pos) + " is not masked");
  }
  const auto rows = checked_logits(model, view);
  const auto it = std::find_if(rows.begin(), rows.end(),
                               [pos](const PositionLogits& r) { return r.position == pos; });
  return softmax(it->logits);
}

}  // namespace seqmc
