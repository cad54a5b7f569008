#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nlemu {

inline constexpr std::uint32_t kDefaultBufferBase = 0x0040'0000;

struct Origin {
  std::string source;
  std::uint64_t stream_offset = 0;

  friend bool operator==(const Origin&, const Origin&) = default;
};

// A candidate payload: the bytes gathered from one client-initiated stream
// (or one slice of it) and the virtual address they are mapped at.
struct DataBuffer {
  std::vector<std::uint8_t> bytes;
  std::uint32_t base = kDefaultBufferBase;
  Origin origin;

  std::span<const std::uint8_t> view() const { return bytes; }
  std::size_t size() const { return bytes.size(); }
  bool empty() const { return bytes.empty(); }

  friend bool operator==(const DataBuffer&, const DataBuffer&) = default;
};

}  // namespace nlemu
