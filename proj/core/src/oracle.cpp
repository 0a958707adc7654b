#include "seqmc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "seqmc/error.hpp"

namespace seqmc::oracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Each size-k subset of [0, n) in lexicographic order.
std::vector<std::vector<Position>> subsets_of_size(std::size_t n, std::size_t k) {
  std::vector<std::vector<Position>> out;
  std::vector<Position> current(k);
  for (std::size_t i = 0; i < k; ++i) current[i] = i;
  while (true) {
    out.push_back(current);
    std::size_t i = k;
    while (i > 0 && current[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++current[i - 1];
    for (std::size_t j = i; j < k; ++j) current[j] = current[j - 1] + 1;
  }
  return out;
}

}  // namespace

std::size_t state_count(std::size_t vocab_size, std::size_t length, std::size_t cap) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (n > cap / vocab_size) {
      throw Error(Errc::StateSpaceTooLarge, "|V|^T for |V|=" + std::to_string(vocab_size) +
                                                ", T=" + std::to_string(length) + " exceeds " +
                                                std::to_string(cap) + " states");
    }
    n *= vocab_size;
  }
  return n;
}

std::vector<double> enumerate_energies(const Scorer& model, EnergyKind kind) {
  const Vocab& vocab = model.vocab();
  const std::size_t n = state_count(vocab.size(), model.length());
  std::vector<double> energies(n);
  for (std::size_t x = 0; x < n; ++x) {
    energies[x] = energy(model, decode_state(x, model.length(), vocab), kind).value;
  }
  return energies;
}

ExactDistribution enumerate_target(const Scorer& model, EnergyKind kind, double target_temp) {
  if (!(target_temp > 0.0)) {
    throw Error(Errc::NonPositiveTemperature, "target temperature " + std::to_string(target_temp));
  }
  ExactDistribution out;
  out.energies = enumerate_energies(model, kind);
  std::vector<double> log_weights(out.energies.size());
  for (std::size_t x = 0; x < log_weights.size(); ++x) log_weights[x] = -out.energies[x] / target_temp;
  out.log_z = log_sum_exp(log_weights);
  out.probs.resize(log_weights.size());
  for (std::size_t x = 0; x < log_weights.size(); ++x) out.probs[x] = std::exp(log_weights[x] - out.log_z);
  return out;
}

CategoricalDist exact_raw_conditional(const Scorer& model, const Sequence& seq, Position pos) {
  state_count(model.vocab().size(), model.length());
  if (pos >= seq.length()) throw Error(Errc::PositionOutOfRange, "position " + std::to_string(pos));
  std::vector<double> log_potential(model.vocab().size());
  for (Token w = 0; w < log_potential.size(); ++w) {
    log_potential[w] = -energy_raw(model, seq.with_token(pos, w)).value;
  }
  return softmax(log_potential);
}

double mismatch_pmlm_vs_raw(const Scorer& model, const Sequence& seq, Position pos) {
  const CategoricalDist exact = exact_raw_conditional(model, seq, pos);
  const CategoricalDist free = mlm_conditional(model, MaskedView(seq, {pos}, model.vocab()), pos);
  return total_variation(free.probs(), exact.probs());
}

Kernel::Kernel(std::size_t states, SamplerSpec spec)
    : states_(states), spec_(spec), matrix_(states * states, 0.0) {}

double Kernel::max_row_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < states_; ++i) {
    double sum = 0.0;
    for (double v : row(i)) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

Kernel transition_kernel(const Scorer& model, const SamplerSpec& spec,
                         const ProposalSettings& settings) {
  settings.validate();
  const Vocab& vocab = model.vocab();
  const std::size_t length = model.length();
  const std::size_t n = state_count(vocab.size(), length, kMaxKernelStates);
  if (spec.block_size == 0 || spec.block_size > length) {
    throw Error(Errc::ConfigInvalid, "kernel block size must lie in [1, T]");
  }
  if (!(spec.target_temp > 0.0)) {
    throw Error(Errc::NonPositiveTemperature, "target temperature must be positive");
  }
  const bool mh = spec.kind == SamplerKind::mh;
  const std::vector<double> energies = mh ? enumerate_energies(model, spec.energy)
                                          : std::vector<double>{};

  const auto blocks = subsets_of_size(length, spec.block_size);
  const double block_weight = 1.0 / static_cast<double>(blocks.size());
  const std::size_t fillings = state_count(vocab.size(), spec.block_size, kMaxKernelStates);

  Kernel kernel(n, spec);
  std::vector<Token> tokens(length);
  for (std::size_t x = 0; x < n; ++x) {
    const Sequence source = decode_state(x, length, vocab);
    for (const auto& block : blocks) {
      const auto dists = block_distributions(model, MaskedView(source, block, vocab), settings);
      double log_q_rev = 0.0;
      for (std::size_t i = 0; i < block.size(); ++i) log_q_rev += dists[i].log_prob(source[block[i]]);

      for (std::size_t f = 0; f < fillings; ++f) {
        std::copy(source.tokens().begin(), source.tokens().end(), tokens.begin());
        std::size_t rest = f;
        double log_q_fwd = 0.0;
        for (std::size_t i = block.size(); i-- > 0;) {
          const auto w = static_cast<Token>(rest % vocab.size());
          rest /= vocab.size();
          tokens[block[i]] = w;
          log_q_fwd += dists[i].log_prob(w);
        }
        if (log_q_fwd == kNegInf) continue;
        const double move_mass = block_weight * std::exp(log_q_fwd);
        const std::size_t y = encode_state(tokens, vocab.size());
        if (y == x || !mh) {
          kernel(x, y) += move_mass;
          continue;
        }
        double accept = 0.0;
        if (log_q_rev != kNegInf) {
          accept = std::exp(std::min(
              0.0, (energies[x] - energies[y]) / spec.target_temp + log_q_rev - log_q_fwd));
        }
        kernel(x, y) += move_mass * accept;
        kernel(x, x) += move_mass * (1.0 - accept);
      }
    }
  }
  return kernel;
}

std::vector<double> stationary_distribution(const Kernel& kernel, double tolerance,
                                            std::size_t max_iterations) {
  const std::size_t n = kernel.size();
  std::vector<double> current(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      const double mass = current[x];
      if (mass == 0.0) continue;
      const auto row = kernel.row(x);
      for (std::size_t y = 0; y < n; ++y) next[y] += mass * row[y];
    }
    double total = 0.0;
    for (double v : next) total += v;
    double change = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      next[y] /= total;
      change += std::abs(next[y] - current[y]);
    }
    current.swap(next);
    if (change < tolerance) return current;
  }
  throw Error(Errc::NoConvergence, "power iteration did not settle within " +
                                       std::to_string(max_iterations) + " iterations");
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(Errc::LengthMismatch, "distributions of length " + std::to_string(p.size()) +
                                          " and " + std::to_string(q.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double detailed_balance_residual(const Kernel& kernel, std::span<const double> target) {
  if (target.size() != kernel.size()) {
    throw Error(Errc::ShapeMismatch, "kernel has " + std::to_string(kernel.size()) +
                                         " states, target " + std::to_string(target.size()));
  }
  double worst = 0.0;
  for (std::size_t x = 0; x < kernel.size(); ++x) {
    for (std::size_t y = x + 1; y < kernel.size(); ++y) {
      worst = std::max(worst, std::abs(target[x] * kernel(x, y) - target[y] * kernel(y, x)));
    }
  }
  return worst;
}

ConditionalTable::ConditionalTable(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw Error(Errc::InvalidTable, "conditional table is empty");
  for (const auto& row : rows_) {
    if (row.size() != rows_.size()) throw Error(Errc::InvalidTable, "conditional table is not square");
    double sum = 0.0;
    for (double v : row) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(Errc::InvalidTable, "conditional entries must be positive and finite");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::InvalidTable, "row does not sum to 1");
  }
}

double bayes_consistency_gap(const ConditionalTable& x1_given_x2,
                             const ConditionalTable& x2_given_x1) {
  const std::size_t n = x1_given_x2.size();
  if (x2_given_x1.size() != n) throw Error(Errc::InvalidTable, "tables differ in size");
  // r(a, b) = log p(X1=a | X2=b) - log p(X2=b | X1=a)
  std::vector<double> r(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      r[a * n + b] = std::log(x1_given_x2(b, a)) - std::log(x2_given_x1(a, b));
    }
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t a2 = a + 1; a2 < n; ++a2) {
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t b2 = b + 1; b2 < n; ++b2) {
          const double cross = r[a * n + b] - r[a2 * n + b] - r[a * n + b2] + r[a2 * n + b2];
          worst = std::max(worst, 0.5 * std::abs(cross));
        }
      }
    }
  }
  return worst;
}

void write_csv(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string());
  out << "index,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << values[i] << '\n';
  if (!out) throw Error(Errc::IoFailure, "failed writing " + path.string());
}

}  // namespace seqmc::oracle
