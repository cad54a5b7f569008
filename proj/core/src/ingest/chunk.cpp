#include "nlemu/ingest/chunk.hpp"

#include <algorithm>

#include "nlemu/error.hpp"

namespace nlemu {

std::vector<DataBuffer> chunk_stream(std::span<const std::uint8_t> bytes,
                                     const ChunkOptions& options, const std::string& source) {
  if (options.max_len == 0 || options.overlap >= options.max_len) {
    throw ParamError("chunking requires 0 <= overlap < max_len");
  }
  std::vector<DataBuffer> chunks;
  const std::size_t stride = options.max_len - options.overlap;
  for (std::size_t start = 0; start < bytes.size(); start += stride) {
    const std::size_t len = std::min(options.max_len, bytes.size() - start);
    DataBuffer buf;
    buf.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                     bytes.begin() + static_cast<std::ptrdiff_t>(start + len));
    buf.base = options.base;
    buf.origin = Origin{source, start};
    chunks.push_back(std::move(buf));
    if (start + len >= bytes.size() || options.prefix_only) break;
  }
  return chunks;
}

}  // namespace nlemu
