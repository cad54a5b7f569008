#include "nlemu/cpu/memory.hpp"

#include <algorithm>
#include <cstring>
#include <string_view>

#include "nlemu/error.hpp"

namespace nlemu {

std::string_view region_kind_name(RegionKind k) {
  switch (k) {
    case RegionKind::buffer: return "buffer";
    case RegionKind::stack: return "stack";
    case RegionKind::tib: return "tib";
    case RegionKind::scratch: return "scratch";
  }
  return "?";
}

void MemoryImage::map(const RegionSpec& spec, std::span<const std::uint8_t> pristine) {
  if (spec.length == 0) throw LayoutError("region has zero length");
  if (spec.end() > 0x1'0000'0000ull) throw LayoutError("region wraps the address space");
  if (!pristine.empty() && pristine.size() != spec.length) {
    throw LayoutError("pristine contents do not match region length");
  }
  for (const auto& r : specs_) {
    if (spec.base < r.end() && r.base < spec.end()) {
      throw LayoutError("regions overlap");
    }
  }
  if (spec.kind == RegionKind::buffer) {
    if (has_buffer_) throw LayoutError("more than one buffer region");
    has_buffer_ = true;
    buffer_index_ = specs_.size();
  }
  if (spec.kind == RegionKind::tib && region_of_kind(RegionKind::tib) != nullptr) {
    throw LayoutError("more than one tib region");
  }
  specs_.push_back(spec);
  backing_.push_back(Backing{pristine, {}});
}

int MemoryImage::index_of(std::uint32_t addr) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].contains(addr)) return static_cast<int>(i);
  }
  return -1;
}

const RegionSpec* MemoryImage::find(std::uint32_t addr) const {
  const int i = index_of(addr);
  return i < 0 ? nullptr : &specs_[static_cast<std::size_t>(i)];
}

const RegionSpec* MemoryImage::region_of_kind(RegionKind kind) const {
  for (const auto& r : specs_) {
    if (r.kind == kind) return &r;
  }
  return nullptr;
}

void MemoryImage::copy_out(std::size_t idx, std::uint32_t off, std::span<std::uint8_t> out) const {
  const Backing& b = backing_[idx];
  std::size_t done = 0;
  while (done < out.size()) {
    const std::uint32_t pos = off + static_cast<std::uint32_t>(done);
    const std::uint32_t page = pos / kPageSize;
    const std::uint32_t in_page = pos % kPageSize;
    const std::size_t n = std::min<std::size_t>(out.size() - done, kPageSize - in_page);
    if (page < b.pages.size() && !b.pages[page].empty()) {
      std::memcpy(out.data() + done, b.pages[page].data() + in_page, n);
    } else if (!b.pristine.empty()) {
      std::memcpy(out.data() + done, b.pristine.data() + pos, n);
    } else {
      std::memset(out.data() + done, 0, n);
    }
    done += n;
  }
}

std::uint8_t* MemoryImage::page_for_write(std::size_t idx, std::uint32_t off) {
  Backing& b = backing_[idx];
  const RegionSpec& spec = specs_[idx];
  const std::uint32_t page = off / kPageSize;
  if (b.pages.empty()) b.pages.resize((spec.length + kPageSize - 1) / kPageSize);
  auto& p = b.pages[page];
  if (p.empty()) {
    const std::uint32_t start = page * kPageSize;
    const std::uint32_t len = std::min(kPageSize, spec.length - start);
    p.resize(len);
    if (!b.pristine.empty()) std::memcpy(p.data(), b.pristine.data() + start, len);
  }
  return p.data() + (off % kPageSize);
}

bool MemoryImage::read(std::uint32_t addr, std::span<std::uint8_t> out) const {
  const int i = index_of(addr);
  if (i < 0) return false;
  const auto idx = static_cast<std::size_t>(i);
  const RegionSpec& r = specs_[idx];
  const std::uint32_t off = addr - r.base;
  if (out.size() > r.length - off) return false;
  copy_out(idx, off, out);
  return true;
}

std::optional<std::uint32_t> MemoryImage::read_u32(std::uint32_t addr) const {
  std::uint8_t raw[4];
  if (!read(addr, raw)) return std::nullopt;
  return static_cast<std::uint32_t>(raw[0]) | (static_cast<std::uint32_t>(raw[1]) << 8) |
         (static_cast<std::uint32_t>(raw[2]) << 16) | (static_cast<std::uint32_t>(raw[3]) << 24);
}

bool MemoryImage::write(std::uint32_t addr, std::span<const std::uint8_t> in, bool force) {
  const int i = index_of(addr);
  if (i < 0) return false;
  const auto idx = static_cast<std::size_t>(i);
  const RegionSpec& r = specs_[idx];
  if (!r.writable && !force) return false;
  const std::uint32_t off = addr - r.base;
  if (in.size() > r.length - off) return false;
  std::size_t done = 0;
  while (done < in.size()) {
    const std::uint32_t pos = off + static_cast<std::uint32_t>(done);
    const std::size_t n = std::min<std::size_t>(in.size() - done, kPageSize - pos % kPageSize);
    std::memcpy(page_for_write(idx, pos), in.data() + done, n);
    done += n;
  }
  return true;
}

std::size_t MemoryImage::fetch(std::uint32_t addr, std::span<std::uint8_t> out) const {
  const int i = index_of(addr);
  if (i < 0) return 0;
  const auto idx = static_cast<std::size_t>(i);
  const RegionSpec& r = specs_[idx];
  if (!r.executable) return 0;
  const std::uint32_t off = addr - r.base;
  const std::size_t n = std::min<std::size_t>(out.size(), r.length - off);
  copy_out(idx, off, out.first(n));
  return n;
}

std::vector<std::uint8_t> MemoryImage::snapshot(const RegionSpec& region) const {
  std::vector<std::uint8_t> bytes(region.length);
  read(region.base, bytes);
  return bytes;
}

}  // namespace nlemu
