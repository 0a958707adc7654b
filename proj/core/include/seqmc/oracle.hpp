#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "seqmc/energy.hpp"
#include "seqmc/proposal.hpp"
#include "seqmc/sampler.hpp"

namespace seqmc {

/// Exact target and kernel machinery for state spaces small enough to list.
/// States are indexed big-endian base-|V| (see encode_state).
namespace oracle {

inline constexpr std::size_t kMaxTargetStates = 100'000;
/// Dense kernels hold states^2 doubles.
inline constexpr std::size_t kMaxKernelStates = 4'096;

/// |V|^T, or StateSpaceTooLarge past `cap`.
std::size_t state_count(std::size_t vocab_size, std::size_t length,
                        std::size_t cap = kMaxTargetStates);

struct ExactDistribution {
  std::vector<double> probs;
  std::vector<double> energies;
  double log_z = 0.0;
};

/// Energy of every sequence of the scorer's length.
std::vector<double> enumerate_energies(const Scorer& model, EnergyKind kind);

/// p(X) = exp(-E(X)/temp) / Z, normalised through log-sum-exp.
ExactDistribution enumerate_target(const Scorer& model, EnergyKind kind, double target_temp = 1.0);

/// Conditional of the E_raw random field at `pos`: |V| full energy
/// evaluations, one per candidate token, then normalised.
CategoricalDist exact_raw_conditional(const Scorer& model, const Sequence& seq, Position pos);

/// Total variation between the free conditional and the exact E_raw
/// conditional at (seq, pos).
double mismatch_pmlm_vs_raw(const Scorer& model, const Sequence& seq, Position pos);

struct SamplerSpec {
  SamplerKind kind = SamplerKind::mh;
  EnergyKind energy = EnergyKind::raw;
  double target_temp = 1.0;
  /// 1 is random-scan single position; k > 1 mixes uniformly over all
  /// position subsets of size k.
  std::size_t block_size = 1;
};

class Kernel {
 public:
  Kernel(std::size_t states, SamplerSpec spec);

  std::size_t size() const noexcept { return states_; }
  const SamplerSpec& spec() const noexcept { return spec_; }
  double operator()(std::size_t from, std::size_t to) const { return matrix_[from * states_ + to]; }
  double& operator()(std::size_t from, std::size_t to) { return matrix_[from * states_ + to]; }
  std::span<const double> row(std::size_t from) const {
    return std::span<const double>(matrix_).subspan(from * states_, states_);
  }
  std::span<const double> entries() const noexcept { return matrix_; }

  /// Largest |row sum - 1|.
  double max_row_defect() const;

 private:
  std::size_t states_;
  SamplerSpec spec_;
  std::vector<double> matrix_;
};

/// Exact one-step kernel of the sampler: the uniform mixture over position
/// blocks of the per-block kernels, rejection (or self-resampling) mass on
/// the diagonal.
Kernel transition_kernel(const Scorer& model, const SamplerSpec& spec,
                         const ProposalSettings& settings);

/// Power iteration from uniform until the L1 change drops below `tolerance`.
/// Throws NoConvergence after `max_iterations`.
std::vector<double> stationary_distribution(const Kernel& kernel, double tolerance = 1e-12,
                                            std::size_t max_iterations = 1'000'000);

double total_variation(std::span<const double> p, std::span<const double> q);

/// max over pairs of |pi_x K(x,y) - pi_y K(y,x)|
double detailed_balance_residual(const Kernel& kernel, std::span<const double> target);

/// Square row-stochastic table of strictly positive conditionals; row r is
/// the distribution given that the conditioning variable equals r.
class ConditionalTable {
 public:
  explicit ConditionalTable(std::vector<std::vector<double>> rows);

  std::size_t size() const noexcept { return rows_.size(); }
  double operator()(std::size_t given, std::size_t value) const { return rows_[given][value]; }

 private:
  std::vector<std::vector<double>> rows_;
};

/// How far two conditionals p(X1|X2), p(X2|X1) are from sharing a joint.
/// Compatible tables have log p(a|b) - log p(b|a) = u(a) + v(b); the gap is
/// half the largest absolute 2x2 cross-difference of that quantity, which is
/// zero exactly when a common joint exists and equals the log of the
/// mismatched conditional odds on a two-token vocabulary.
double bayes_consistency_gap(const ConditionalTable& x1_given_x2,
                             const ConditionalTable& x2_given_x1);

/// CSV with header "index,value"; kernels are written row-major.
void write_csv(const std::filesystem::path& path, std::span<const double> values);

}  // namespace oracle
}  // namespace seqmc
