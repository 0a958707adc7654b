#include "seqmc/tabular_model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "seqmc/error.hpp"
#include "seqmc/random.hpp"

namespace seqmc {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'Q', 'M', 'C'};

std::uint64_t checked_pow(std::uint64_t base, std::size_t exp, std::uint64_t cap) {
  std::uint64_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (out > cap / base) return cap + 1;
    out *= base;
  }
  return out;
}

double hashed_logit(std::uint64_t seed, Position pos, std::uint64_t context, Token token,
                    double scale) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(pos));
  h = splitmix64(h ^ context);
  h = splitmix64(h ^ static_cast<std::uint64_t>(token));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return scale * (2.0 * u - 1.0);
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error(Errc::IoFailure, "tabular model file is truncated");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  return std::bit_cast<T>(bytes);
}

}  // namespace

std::uint64_t tabular_row_count(std::size_t vocab_size, std::size_t length, std::uint64_t cap) {
  if (length == 0) throw Error(Errc::EmptySequence, "tabular model length must be positive");
  const std::uint64_t per_position = checked_pow(vocab_size, length - 1, cap);
  if (per_position > cap || per_position > cap / length) {
    throw Error(Errc::StateSpaceTooLarge,
                "T*|V|^(T-1) rows for |V|=" + std::to_string(vocab_size) + ", T=" +
                    std::to_string(length) + " exceeds cap " + std::to_string(cap));
  }
  return per_position * length;
}

TabularMLM::TabularMLM(Vocab vocab, std::size_t length, std::vector<double> table,
                       std::uint64_t seed, double scale)
    : vocab_(vocab),
      length_(length),
      rows_per_position_(
          tabular_row_count(vocab.size(), length, std::numeric_limits<std::uint64_t>::max() / vocab.size()) /
          length),
      table_(std::move(table)),
      seed_(seed),
      scale_(scale) {
  if (table_.size() != rows_per_position_ * length_ * vocab_.size()) {
    throw Error(Errc::ShapeMismatch, "table holds " + std::to_string(table_.size()) +
                                         " logits, expected " +
                                         std::to_string(rows_per_position_ * length_ * vocab_.size()));
  }
  for (double v : table_) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidTable, "table contains a non-finite logit");
  }
}

TabularMLM TabularMLM::generate(std::uint64_t seed, std::size_t vocab_size, std::size_t length,
                                double scale, std::uint64_t row_cap) {
  const Vocab vocab(vocab_size);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(Errc::ConfigInvalid, "scale must be a positive finite number");
  }
  const std::uint64_t rows = tabular_row_count(vocab_size, length, row_cap);
  const std::uint64_t per_position = rows / length;
  std::vector<double> table(rows * vocab_size);
  std::size_t k = 0;
  for (Position t = 0; t < length; ++t) {
    for (std::uint64_t ctx = 0; ctx < per_position; ++ctx) {
      for (Token w = 0; w < vocab_size; ++w) table[k++] = hashed_logit(seed, t, ctx, w, scale);
    }
  }
  return TabularMLM(vocab, length, std::move(table), seed, scale);
}

TabularMLM TabularMLM::from_function(const Vocab& vocab, std::size_t length, const RowFunction& fn,
                                     std::uint64_t row_cap) {
  const std::uint64_t rows = tabular_row_count(vocab.size(), length, row_cap);
  const std::uint64_t per_position = rows / length;
  std::vector<double> table;
  table.reserve(rows * vocab.size());
  std::vector<Token> tokens(length);
  for (Position t = 0; t < length; ++t) {
    for (std::uint64_t ctx = 0; ctx < per_position; ++ctx) {
      std::uint64_t rest = ctx;
      for (std::size_t i = length; i-- > 0;) {
        if (i == t) {
          tokens[i] = 0;
          continue;
        }
        tokens[i] = static_cast<Token>(rest % vocab.size());
        rest /= vocab.size();
      }
      const LogitRow row = fn(t, Sequence(tokens, vocab));
      if (row.size() != vocab.size()) {
        throw Error(Errc::ShapeMismatch, "row function returned a row of the wrong width");
      }
      table.insert(table.end(), row.begin(), row.end());
    }
  }
  return TabularMLM(vocab, length, std::move(table));
}

std::span<const double> TabularMLM::row(Position pos, std::uint64_t context_key) const {
  if (pos >= length_ || context_key >= rows_per_position_) {
    throw Error(Errc::PositionOutOfRange, "no table row for position " + std::to_string(pos));
  }
  const std::size_t offset = (pos * rows_per_position_ + context_key) * vocab_.size();
  return std::span<const double>(table_).subspan(offset, vocab_.size());
}

std::uint64_t TabularMLM::context_key(std::span<const Token> tokens, Position pos) const {
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i != pos) key = key * vocab_.size() + tokens[i];
  }
  return key;
}

std::vector<PositionLogits> TabularMLM::positional_logits(const MaskedView& view) const {
  if (view.length() != length_) {
    throw Error(Errc::LengthMismatch, "view length " + std::to_string(view.length()) +
                                          " but model length " + std::to_string(length_));
  }
  const auto masked = view.masked();
  std::vector<Token> tokens(view.base().tokens().begin(), view.base().tokens().end());
  std::vector<PositionLogits> out;
  out.reserve(masked.size());
  for (Position t : masked) {
    std::vector<Position> others;
    for (Position p : masked) {
      if (p != t) others.push_back(p);
    }
    LogitRow sum(vocab_.size(), 0.0);
    const std::uint64_t fillings = checked_pow(vocab_.size(), others.size(),
                                               std::numeric_limits<std::uint64_t>::max() - 1);
    for (std::uint64_t f = 0; f < fillings; ++f) {
      std::uint64_t rest = f;
      for (std::size_t i = others.size(); i-- > 0;) {
        tokens[others[i]] = static_cast<Token>(rest % vocab_.size());
        rest /= vocab_.size();
      }
      const auto r = row(t, context_key(tokens, t));
      for (std::size_t w = 0; w < sum.size(); ++w) sum[w] += r[w];
    }
    if (fillings > 1) {
      for (double& v : sum) v /= static_cast<double>(fillings);
    }
    out.push_back({t, std::move(sum)});
  }
  return out;
}

void TabularMLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, seed_);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(vocab_.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(length_));
  put_le<double>(out, scale_);
  for (double v : table_) put_le<double>(out, v);
  if (!out) throw Error(Errc::IoFailure, "failed writing " + path.string());
}

TabularMLM TabularMLM::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(Errc::IoFailure, path.string() + " is not a SQMC file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error(Errc::VersionMismatch, "SQMC version " + std::to_string(version));
  }
  const auto seed = get_le<std::uint64_t>(in);
  const auto vocab_size = get_le<std::uint32_t>(in);
  const auto length = get_le<std::uint32_t>(in);
  const auto scale = get_le<double>(in);
  const Vocab vocab(vocab_size);
  const std::uint64_t rows = tabular_row_count(vocab_size, length, kDefaultRowCap);
  std::vector<double> table(rows * vocab_size);
  for (double& v : table) v = get_le<double>(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(Errc::IoFailure, path.string() + " has trailing bytes");
  }
  return TabularMLM(vocab, length, std::move(table), seed, scale);
}

}  // namespace seqmc
