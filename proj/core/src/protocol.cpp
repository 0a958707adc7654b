#include "seqmc/protocol.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "seqmc/error.hpp"

namespace seqmc::protocol {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::MalformedResponse, why); }

// nlohmann prints the shortest round-trip form; the wire format asks for a
// fixed 17 digits, so rows are spliced in by hand.
std::string rows_text(const std::vector<std::vector<double>>& rows) {
  std::string out = "[";
  char buf[32];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r > 0) out += ',';
    out += '[';
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      const double v = rows[r][i];
      if (!std::isfinite(v)) throw Error(Errc::MalformedResponse, "non-finite logit in response");
      if (i > 0) out += ',';
      const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
      out.append(buf, static_cast<std::size_t>(n));
      // Keep integral values (and -0) in floating-point form on the wire.
      if (std::string_view(buf, static_cast<std::size_t>(n)).find_first_of(".en") == std::string_view::npos) {
        out += ".0";
      }
    }
    out += ']';
  }
  return out + "]";
}

template <typename T>
T field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) malformed(std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    malformed(std::string("field '") + name + "' has the wrong type");
  }
}

std::int64_t integer_field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) malformed(std::string("missing field '") + name + "'");
  if (!it->is_number_integer()) malformed(std::string("field '") + name + "' is not an integer");
  return it->get<std::int64_t>();
}

}  // namespace

std::string encode(const Message& message) {
  struct Visitor {
    std::string operator()(const Hello& m) const {
      return json{{"kind", "hello"}, {"protocol_version", m.protocol_version}}.dump();
    }
    std::string operator()(const ModelInfo& m) const {
      return json{{"kind", "info"},
                  {"protocol_version", m.protocol_version},
                  {"vocab_size", m.vocab_size},
                  {"mask_id", m.mask_id},
                  {"max_length", m.max_length},
                  {"name", m.name}}
          .dump();
    }
    std::string operator()(const LogitsRequest& m) const {
      return json{{"kind", "logits"}, {"id", m.id}, {"tokens", m.tokens}, {"masked", m.masked}}.dump();
    }
    std::string operator()(const LogitsResponse& m) const {
      return R"({"kind":"logits","id":)" + std::to_string(m.id) + R"(,"rows":)" + rows_text(m.rows) +
             "}";
    }
    std::string operator()(const ErrorReply& m) const {
      return json{{"kind", "error"}, {"message", m.message}}.dump();
    }
  };
  return std::visit(Visitor{}, message);
}

Message decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    malformed(std::string("not JSON: ") + e.what());
  }
  if (!j.is_object()) malformed("message is not an object");
  const auto kind = field<std::string>(j, "kind");

  if (kind == "hello") {
    return Hello{static_cast<int>(integer_field(j, "protocol_version"))};
  }
  if (kind == "info") {
    ModelInfo m;
    m.protocol_version = static_cast<int>(integer_field(j, "protocol_version"));
    m.vocab_size = integer_field(j, "vocab_size");
    m.mask_id = integer_field(j, "mask_id");
    m.max_length = integer_field(j, "max_length");
    m.name = field<std::string>(j, "name");
    return m;
  }
  if (kind == "error") {
    return ErrorReply{field<std::string>(j, "message")};
  }
  if (kind == "logits") {
    if (!j.contains("id") || !j["id"].is_number_unsigned()) malformed("logits message needs a numeric id");
    const auto id = j["id"].get<std::uint64_t>();
    if (j.contains("rows")) {
      LogitsResponse m{id, field<std::vector<std::vector<double>>>(j, "rows")};
      for (const auto& row : m.rows) {
        for (double v : row) {
          if (!std::isfinite(v)) malformed("non-finite logit in response");
        }
      }
      return m;
    }
    return LogitsRequest{id, field<std::vector<std::int64_t>>(j, "tokens"),
                         field<std::vector<std::int64_t>>(j, "masked")};
  }
  malformed("unknown message kind '" + kind + "'");
}

}  // namespace seqmc::protocol
