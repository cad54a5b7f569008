#include "nlemu/corpus/xor.hpp"

#include <string_view>

#include "nlemu/error.hpp"

namespace nlemu {

std::vector<std::uint8_t> encode_payload_xor(std::span<const std::uint8_t> payload,
                                             std::uint8_t key, bool nul_free) {
  if (payload.empty()) throw ParamError("payload must be nonempty");
  std::vector<std::uint8_t> out(payload.size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    out[i] = payload[i] ^ key;
    if (nul_free && out[i] == 0) throw KeyError("key produces a NUL byte");
  }
  return out;
}

std::vector<std::uint8_t> inert_payload(std::size_t length) {
  constexpr std::string_view marker = "NLE-INERT-MARKER";
  std::vector<std::uint8_t> out(length);
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = i == 0 ? kInertPayloadLead : static_cast<std::uint8_t>(marker[(i - 1) % marker.size()]);
  }
  return out;
}

}  // namespace nlemu
