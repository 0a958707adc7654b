#include "seqmc/bridge.hpp"

#include <thread>

#include "seqmc/error.hpp"

namespace seqmc {

namespace {

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::MalformedResponse, why); }

void validate_info(const protocol::ModelInfo& info) {
  if (info.vocab_size < 2) malformed("server vocab_size below 2");
  if (info.mask_id < 0) malformed("server mask_id is negative");
  if (info.max_length < 1) malformed("server max_length below 1");
  if (info.mask_id < info.vocab_size && info.vocab_size < 3) {
    malformed("server vocabulary has fewer than 2 ordinary tokens");
  }
}

}  // namespace

protocol::ModelInfo handshake(Transport& transport) {
  transport.send_line(protocol::encode(protocol::Hello{}));
  const auto reply = protocol::decode(transport.receive_line());
  if (const auto* err = std::get_if<protocol::ErrorReply>(&reply)) {
    malformed("server refused hello: " + err->message);
  }
  const auto* info = std::get_if<protocol::ModelInfo>(&reply);
  if (info == nullptr) malformed("expected an info message");
  if (info->protocol_version != protocol::kVersion) {
    throw Error(Errc::VersionMismatch, "server speaks protocol " +
                                           std::to_string(info->protocol_version) + ", client speaks " +
                                           std::to_string(protocol::kVersion));
  }
  validate_info(*info);
  return *info;
}

TokenMap::TokenMap(const protocol::ModelInfo& info)
    : server_size_(info.vocab_size),
      mask_id_(info.mask_id),
      local_size_(static_cast<std::size_t>(info.mask_id < info.vocab_size ? info.vocab_size - 1
                                                                            : info.vocab_size)) {}

std::int64_t TokenMap::to_server(Token local) const noexcept {
  const auto id = static_cast<std::int64_t>(local);
  return id >= mask_id_ ? id + 1 : id;
}

LogitRow TokenMap::to_local(const std::vector<double>& server_row) const {
  if (static_cast<std::int64_t>(server_row.size()) != server_size_) {
    malformed("row has " + std::to_string(server_row.size()) + " entries, expected " +
              std::to_string(server_size_));
  }
  LogitRow out;
  out.reserve(local_size_);
  for (std::int64_t i = 0; i < server_size_; ++i) {
    if (i != mask_id_) out.push_back(server_row[static_cast<std::size_t>(i)]);
  }
  return out;
}

RemoteScorer::Connection RemoteScorer::connect_with_retries(const Connector& connector,
                                                           const BridgeOptions& options) {
  for (unsigned attempt = 0;; ++attempt) {
    try {
      auto transport = connector();
      auto info = handshake(*transport);
      return {std::move(transport), std::move(info)};
    } catch (const Error& e) {
      if (e.code() != Errc::ConnectFailure || attempt >= options.retries) throw;
    }
    std::this_thread::sleep_for(options.backoff * (1LL << std::min(attempt, 20U)));
  }
}

RemoteScorer::RemoteScorer(const std::string& endpoint, BridgeOptions options)
    : RemoteScorer(
          [endpoint, timeout = options.timeout] { return open_transport(endpoint, timeout); },
          options) {}

RemoteScorer::RemoteScorer(Connector connector, BridgeOptions options)
    : RemoteScorer(connector, options, connect_with_retries(connector, options)) {}

RemoteScorer::RemoteScorer(Connector connector, BridgeOptions options, Connection first)
    : connector_(std::move(connector)),
      options_(options),
      info_(std::move(first.second)),
      map_(info_),
      vocab_(map_.local_vocab_size()),
      length_(static_cast<std::size_t>(info_.max_length)),
      transport_(std::move(first.first)) {}

std::size_t RemoteScorer::connections_opened() const {
  std::lock_guard lock(mutex_);
  return connections_;
}

std::vector<PositionLogits> RemoteScorer::positional_logits(const MaskedView& view) const {
  if (view.base().length() > length_) {
    throw Error(Errc::LengthMismatch, "view length " + std::to_string(view.base().length()) +
                                          " exceeds server max_length " + std::to_string(length_));
  }
  protocol::LogitsRequest request;
  for (std::size_t i = 0; i < view.base().length(); ++i) {
    request.tokens.push_back(view.is_masked(i) ? map_.server_mask_id()
                                               : map_.to_server(view.base()[i]));
  }
  for (Position p : view.masked()) request.masked.push_back(static_cast<std::int64_t>(p));

  std::lock_guard lock(mutex_);
  request.id = next_id_++;
  const std::string line = protocol::encode(request);

  protocol::Message reply;
  for (unsigned attempt = 0;; ++attempt) {
    try {
      if (!transport_) {
        transport_ = connector_();
        ++connections_;
        const auto info = handshake(*transport_);
        if (info != info_) malformed("server changed its model description after reconnecting");
      }
      transport_->send_line(line);
      reply = protocol::decode(transport_->receive_line());
      break;
    } catch (const Error& e) {
      if (e.code() != Errc::ConnectFailure) throw;
      transport_.reset();
      if (attempt >= options_.retries) {
        throw Error(Errc::ScorerFailure, "remote scorer unreachable after " +
                                             std::to_string(attempt + 1) + " attempts: " + e.what());
      }
    }
    std::this_thread::sleep_for(options_.backoff * (1LL << std::min(attempt, 20U)));
  }

  if (const auto* err = std::get_if<protocol::ErrorReply>(&reply)) {
    throw Error(Errc::ScorerFailure, "server error: " + err->message);
  }
  const auto* response = std::get_if<protocol::LogitsResponse>(&reply);
  if (response == nullptr) malformed("expected a logits response");
  if (response->id != request.id) {
    malformed("response id " + std::to_string(response->id) + " does not match request id " +
              std::to_string(request.id));
  }
  if (response->rows.size() != view.masked().size()) {
    malformed("expected " + std::to_string(view.masked().size()) + " rows, got " +
              std::to_string(response->rows.size()));
  }
  std::vector<PositionLogits> out;
  out.reserve(response->rows.size());
  for (std::size_t i = 0; i < response->rows.size(); ++i) {
    out.push_back({view.masked()[i], map_.to_local(response->rows[i])});
  }
  return out;
}

}  // namespace seqmc
