#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "nlemu/cpu/instruction.hpp"
#include "nlemu/cpu/memory.hpp"

namespace nlemu {

struct Flags {
  bool cf = false;
  bool zf = false;
  bool sf = false;
  bool of = false;

  friend bool operator==(const Flags&, const Flags&) = default;
};

struct CpuState {
  std::array<std::uint32_t, 8> regs{};
  std::uint32_t eip = 0;
  Flags flags;
  std::uint32_t fpu_last_ip = 0;  // 0 until an FPU instruction executes
  std::uint32_t fs_base = 0;
  std::uint64_t retired = 0;

  std::uint32_t& reg(Reg r) { return regs[static_cast<std::size_t>(r)]; }
  std::uint32_t reg(Reg r) const { return regs[static_cast<std::size_t>(r)]; }

  friend bool operator==(const CpuState&, const CpuState&) = default;
};

// How general registers other than ESP are seeded for a chain.
struct RegisterPolicy {
  enum class Kind : std::uint8_t { zeroed, randomized, fixed };

  Kind kind = Kind::zeroed;
  std::uint64_t seed = 0;
  std::array<std::uint32_t, 8> values{};  // `fixed` only; the ESP slot is ignored

  static RegisterPolicy zeroed() { return {}; }
  static RegisterPolicy randomized(std::uint64_t seed) { return {Kind::randomized, seed, {}}; }
  static RegisterPolicy fixed(const std::array<std::uint32_t, 8>& values) {
    return {Kind::fixed, 0, values};
  }

  friend bool operator==(const RegisterPolicy&, const RegisterPolicy&) = default;
};

struct MemoryLayoutConfig {
  std::uint32_t buffer_base = 0x0040'0000;
  std::uint32_t stack_base = 0x0012'F000;  // lowest stack address
  std::uint32_t stack_size = 0x1'0000;
  std::uint32_t tib_base = 0x7FFD'0000;
  std::uint32_t tib_size = 0x1000;
  std::uint32_t scratch_base = 0x00A0'0000;
  // Map the buffer directly above the live stack and advertise the buffer's
  // end as the TIB stack top, as if the payload had landed in a stack frame.
  bool stack_resident_buffer = false;

  std::uint32_t stack_top() const { return stack_base + stack_size; }
  std::uint32_t effective_buffer_base() const {
    return stack_resident_buffer ? stack_top() : buffer_base;
  }

  friend bool operator==(const MemoryLayoutConfig&, const MemoryLayoutConfig&) = default;
};

inline constexpr std::uint32_t kInitialStackSlack = 16;
inline constexpr std::uint32_t kTibStackTopOffset = 0x04;
inline constexpr std::uint32_t kTibStackLimitOffset = 0x08;

// Builds a fresh machine: buffer (viewing `buffer`, which must outlive the
// image), stack, and a read-only TIB whose +0x04/+0x08 dwords hold the stack
// top/bottom. ESP starts 16 bytes below the stack top under every policy.
// Throws LayoutError when regions overlap or the buffer is empty.
std::pair<CpuState, MemoryImage> init_state(const RegisterPolicy& policy,
                                            const MemoryLayoutConfig& layout,
                                            std::span<const std::uint8_t> buffer);

}  // namespace nlemu
