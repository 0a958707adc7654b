#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "seqmc/config.hpp"
#include "seqmc/energy.hpp"
#include "seqmc/protocol.hpp"
#include "seqmc/transport.hpp"

namespace seqmc {

/// Sends hello, reads info. VersionMismatch if the server speaks another
/// protocol version, MalformedResponse if the reply is not a valid info
/// message.
protocol::ModelInfo handshake(Transport& transport);

/// Local token ids are the server's with the mask id removed: server ids
/// above the mask shift down by one. A mask id outside the server vocabulary
/// leaves ids unchanged.
class TokenMap {
 public:
  explicit TokenMap(const protocol::ModelInfo& info);

  std::size_t local_vocab_size() const noexcept { return local_size_; }
  std::int64_t server_mask_id() const noexcept { return mask_id_; }
  std::int64_t to_server(Token local) const noexcept;
  /// Drops the mask column of a server row.
  LogitRow to_local(const std::vector<double>& server_row) const;

 private:
  std::int64_t server_size_;
  std::int64_t mask_id_;
  std::size_t local_size_;
};

/// Scorer served by another process over protocol v1. Requests on one
/// instance are serialized, so chains may share it.
///
/// Connection-level failures (refused, closed, timed out) are retried up to
/// `options.retries` times on a fresh connection, waiting backoff * 2^i
/// before retry i. When they run out the call fails with ScorerFailure.
/// Error replies and malformed responses are not retried.
class RemoteScorer final : public Scorer {
 public:
  using Connector = std::function<std::unique_ptr<Transport>()>;

  RemoteScorer(const std::string& endpoint, BridgeOptions options);
  RemoteScorer(Connector connector, BridgeOptions options);

  const Vocab& vocab() const override { return vocab_; }
  /// Server's max_length.
  std::size_t length() const override { return length_; }
  std::vector<PositionLogits> positional_logits(const MaskedView& view) const override;

  const protocol::ModelInfo& info() const noexcept { return info_; }
  const TokenMap& token_map() const noexcept { return map_; }
  /// Connections opened so far, the first one included.
  std::size_t connections_opened() const;

 private:
  using Connection = std::pair<std::unique_ptr<Transport>, protocol::ModelInfo>;

  RemoteScorer(Connector connector, BridgeOptions options, Connection first);
  static Connection connect_with_retries(const Connector& connector, const BridgeOptions& options);

  Connector connector_;
  BridgeOptions options_;
  protocol::ModelInfo info_;
  TokenMap map_;
  Vocab vocab_;
  std::size_t length_;

  mutable std::mutex mutex_;
  mutable std::unique_ptr<Transport> transport_;
  mutable std::uint64_t next_id_ = 1;
  mutable std::size_t connections_ = 1;
};

}  // namespace seqmc
