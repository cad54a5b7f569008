#include "nlemu/cpu/state.hpp"

#include <random>

#include "nlemu/error.hpp"

namespace nlemu {

namespace {

void put_u32(MemoryImage& mem, std::uint32_t addr, std::uint32_t value) {
  const std::uint8_t raw[4] = {
      static_cast<std::uint8_t>(value), static_cast<std::uint8_t>(value >> 8),
      static_cast<std::uint8_t>(value >> 16), static_cast<std::uint8_t>(value >> 24)};
  mem.write(addr, raw, /*force=*/true);
}

}  // namespace

std::pair<CpuState, MemoryImage> init_state(const RegisterPolicy& policy,
                                            const MemoryLayoutConfig& layout,
                                            std::span<const std::uint8_t> buffer) {
  if (buffer.empty()) throw LayoutError("empty buffer");
  if (buffer.size() > 0xFFFF'FFFFull) throw LayoutError("buffer too large");
  if (layout.stack_size < 64 || layout.tib_size < 0x1C) {
    throw LayoutError("stack or tib region too small");
  }

  MemoryImage mem;
  const std::uint32_t buffer_base = layout.effective_buffer_base();
  const auto buffer_len = static_cast<std::uint32_t>(buffer.size());
  mem.map({buffer_base, buffer_len, RegionKind::buffer, true, true}, buffer);
  mem.map({layout.stack_base, layout.stack_size, RegionKind::stack, true, true});
  mem.map({layout.tib_base, layout.tib_size, RegionKind::tib, false, false});

  const std::uint32_t advertised_top =
      layout.stack_resident_buffer ? buffer_base + buffer_len : layout.stack_top();
  put_u32(mem, layout.tib_base + 0x00, 0xFFFF'FFFF);  // end of SEH chain
  put_u32(mem, layout.tib_base + kTibStackTopOffset, advertised_top);
  put_u32(mem, layout.tib_base + kTibStackLimitOffset, layout.stack_base);
  put_u32(mem, layout.tib_base + 0x18, layout.tib_base);  // self pointer

  CpuState cpu;
  switch (policy.kind) {
    case RegisterPolicy::Kind::zeroed:
      break;
    case RegisterPolicy::Kind::randomized: {
      std::mt19937_64 rng(policy.seed);
      for (auto& r : cpu.regs) r = static_cast<std::uint32_t>(rng() >> 32);
      break;
    }
    case RegisterPolicy::Kind::fixed:
      cpu.regs = policy.values;
      break;
  }
  cpu.reg(Reg::esp) = layout.stack_top() - kInitialStackSlack;
  cpu.eip = buffer_base;
  cpu.fs_base = layout.tib_base;
  return {cpu, std::move(mem)};
}

}  // namespace nlemu
