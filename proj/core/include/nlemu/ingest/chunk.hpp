#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlemu/data_buffer.hpp"

namespace nlemu {

inline constexpr std::size_t kDefaultChunkMax = 64 * 1024;
inline constexpr std::size_t kDefaultChunkOverlap = 4 * 1024;

struct ChunkOptions {
  std::size_t max_len = kDefaultChunkMax;
  std::size_t overlap = kDefaultChunkOverlap;
  bool prefix_only = false;  // inspect only the first chunk of each stream
  std::uint32_t base = kDefaultBufferBase;
};

// Slices a stream into buffers of at most max_len bytes; chunk i+1 starts
// `overlap` bytes before chunk i ends, so any run of up to `overlap` bytes
// crossing a boundary appears whole in the later chunk. Throws ParamError
// unless 0 <= overlap < max_len.
std::vector<DataBuffer> chunk_stream(std::span<const std::uint8_t> bytes,
                                     const ChunkOptions& options = {},
                                     const std::string& source = {});

}  // namespace nlemu
