#pragma once

#include <cstdint>
#include <vector>

#include "nlemu/cpu/state.hpp"

namespace nlemu {

enum class LoopVerdict : std::uint8_t { proceed, loop_detected };

// Hash of registers, flags and the FPU IP. Memory and the retired counter are
// excluded, so a loop that only writes memory still repeats.
inline std::uint64_t state_hash(const CpuState& s) {
  std::uint64_t h = 0xCBF2'9CE4'8422'2325ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x0000'0100'0000'01B3ull;
    h ^= h >> 29;
  };
  for (std::uint32_t r : s.regs) mix(r);
  mix((std::uint64_t{s.flags.cf} << 0) | (std::uint64_t{s.flags.zf} << 1) |
      (std::uint64_t{s.flags.sf} << 2) | (std::uint64_t{s.flags.of} << 3));
  mix(s.fpu_last_ip);
  return h;
}

// Remembers the last `window` (eip, state-hash) pairs and reports a loop
// when an exact pair recurs. The chain runner feeds it only at branch
// targets; any exact state cycle passes through one, so nothing is lost.
class LoopGuard {
 public:
  explicit LoopGuard(std::size_t window) : ring_(window) {}

  LoopVerdict observe(std::uint32_t eip, std::uint64_t hash) {
    if (ring_.empty()) return LoopVerdict::proceed;
    for (std::size_t i = 0; i < filled_; ++i) {
      if (ring_[i].hash == hash && ring_[i].eip == eip) return LoopVerdict::loop_detected;
    }
    ring_[next_] = Entry{eip, hash};
    next_ = (next_ + 1) % ring_.size();
    if (filled_ < ring_.size()) ++filled_;
    return LoopVerdict::proceed;
  }

  void reset() {
    next_ = 0;
    filled_ = 0;
  }

 private:
  struct Entry {
    std::uint32_t eip = 0;
    std::uint64_t hash = 0;
  };
  std::vector<Entry> ring_;
  std::size_t next_ = 0;
  std::size_t filled_ = 0;
};

}  // namespace nlemu
