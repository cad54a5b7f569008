#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nlemu {

// output[i] = payload[i] ^ key. With nul_free set, throws KeyError when any
// output byte would be 0x00 so the caller can draw another key. Throws
// ParamError on an empty payload.
std::vector<std::uint8_t> encode_payload_xor(std::span<const std::uint8_t> payload,
                                             std::uint8_t key, bool nul_free = false);

inline constexpr std::uint8_t kInertPayloadLead = 0xF4;

// The inert plaintext carried by every generated sample: 0xF4 followed by a
// repeating ASCII marker. It halts any emulator that jumps into it and is
// identical for every seed of a given length.
std::vector<std::uint8_t> inert_payload(std::size_t length);

}  // namespace nlemu
