#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace seqmc::protocol {

inline constexpr int kVersion = 1;

struct Hello {
  int protocol_version = kVersion;
  friend bool operator==(const Hello&, const Hello&) = default;
};

/// Server description; ids are server-side.
struct ModelInfo {
  int protocol_version = kVersion;
  std::int64_t vocab_size = 0;
  std::int64_t mask_id = 0;
  std::int64_t max_length = 0;
  std::string name;
  friend bool operator==(const ModelInfo&, const ModelInfo&) = default;
};

struct LogitsRequest {
  std::uint64_t id = 0;
  std::vector<std::int64_t> tokens;
  std::vector<std::int64_t> masked;
  friend bool operator==(const LogitsRequest&, const LogitsRequest&) = default;
};

struct LogitsResponse {
  std::uint64_t id = 0;
  std::vector<std::vector<double>> rows;
  friend bool operator==(const LogitsResponse&, const LogitsResponse&) = default;
};

struct ErrorReply {
  std::string message;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using Message = std::variant<Hello, ModelInfo, LogitsRequest, LogitsResponse, ErrorReply>;

/// One JSON object, no trailing newline. Reals are written with 17
/// significant digits; non-finite reals cannot be encoded.
std::string encode(const Message& message);

/// Throws MalformedResponse on anything that is not a well-formed v1
/// message. A mismatched protocol_version still parses.
Message decode(std::string_view line);

}  // namespace seqmc::protocol
