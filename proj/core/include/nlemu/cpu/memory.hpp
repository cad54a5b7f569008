#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nlemu {

enum class RegionKind : std::uint8_t { buffer, stack, tib, scratch };

std::string_view region_kind_name(RegionKind k);

// `syscall_*` kinds are accesses performed on the shellcode's behalf by a
// modeled system service; they never count as decryptor reads.
enum class AccessKind : std::uint8_t { read, write, syscall_read, syscall_write };

struct AccessEvent {
  AccessKind kind = AccessKind::read;
  std::uint32_t addr = 0;
  std::uint32_t size = 0;
  std::uint32_t at_eip = 0;
  bool in_buffer = false;

  friend bool operator==(const AccessEvent&, const AccessEvent&) = default;
};

struct RegionSpec {
  std::uint32_t base = 0;
  std::uint32_t length = 0;
  RegionKind kind = RegionKind::scratch;
  bool writable = true;
  bool executable = true;

  std::uint64_t end() const { return std::uint64_t{base} + length; }
  bool contains(std::uint32_t addr) const { return addr >= base && addr - base < length; }

  friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

// Flat 32-bit address space made of a few disjoint regions. Region contents
// are copy-on-write over an optional pristine view (zero-filled when absent),
// in 4 KiB pages, so a chain pays only for the pages it dirties.
class MemoryImage {
 public:
  static constexpr std::uint32_t kPageSize = 4096;

  // Throws LayoutError on overlap, zero length or address-space wraparound.
  // `pristine` must outlive the image when non-empty.
  void map(const RegionSpec& spec, std::span<const std::uint8_t> pristine = {});

  std::span<const RegionSpec> regions() const { return specs_; }
  const RegionSpec* find(std::uint32_t addr) const;
  const RegionSpec* region_of_kind(RegionKind kind) const;
  const RegionSpec& buffer() const { return specs_[buffer_index_]; }
  bool in_buffer(std::uint32_t addr) const {
    return has_buffer_ && specs_[buffer_index_].contains(addr);
  }

  // Raw access (no logging, no permission checks on read). The whole range
  // must lie inside a single region.
  bool read(std::uint32_t addr, std::span<std::uint8_t> out) const;
  bool write(std::uint32_t addr, std::span<const std::uint8_t> in, bool force = false);
  std::optional<std::uint32_t> read_u32(std::uint32_t addr) const;

  // Copies up to out.size() bytes starting at addr from an executable region
  // without crossing its end; returns the count copied (0 = not executable).
  std::size_t fetch(std::uint32_t addr, std::span<std::uint8_t> out) const;

  std::vector<std::uint8_t> snapshot(const RegionSpec& region) const;

  std::vector<AccessEvent>& access_log() { return log_; }
  const std::vector<AccessEvent>& access_log() const { return log_; }
  void log(AccessKind kind, std::uint32_t addr, std::uint32_t size, std::uint32_t at_eip) {
    log_.push_back(AccessEvent{kind, addr, size, at_eip, in_buffer(addr)});
  }

 private:
  struct Backing {
    std::span<const std::uint8_t> pristine;
    std::vector<std::vector<std::uint8_t>> pages;  // empty page = untouched
  };

  int index_of(std::uint32_t addr) const;
  void copy_out(std::size_t idx, std::uint32_t off, std::span<std::uint8_t> out) const;
  std::uint8_t* page_for_write(std::size_t idx, std::uint32_t off);

  std::vector<RegionSpec> specs_;
  std::vector<Backing> backing_;
  std::vector<AccessEvent> log_;
  std::size_t buffer_index_ = 0;
  bool has_buffer_ = false;
};

}  // namespace nlemu
