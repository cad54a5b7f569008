#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "nlemu/cpu/memory.hpp"
#include "nlemu/cpu/state.hpp"
#include "nlemu/cpu/step.hpp"
#include "nlemu/data_buffer.hpp"

namespace nlemu {

struct ChainConfig {
  RegisterPolicy registers;
  MemoryLayoutConfig layout;
  StepOptions step;
  std::uint64_t instruction_budget = 8192;
  std::uint32_t loop_guard_window = 64;  // 0 disables the guard

  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

// Everything observed while emulating from one entry offset.
struct ExecutionTrace {
  std::uint32_t entry_offset = 0;
  std::uint32_t entry_address = 0;
  std::uint64_t retired = 0;
  TerminationReason termination = TerminationReason::budget_exhausted;
  std::uint32_t final_eip = 0;

  RegionSpec buffer;
  RegionSpec stack;
  std::uint32_t fs_base = 0;
  std::uint32_t tib_stack_top = 0;
  std::uint32_t tib_stack_limit = 0;

  std::vector<AccessEvent> access_log;
  std::vector<ControlMarker> markers;

  std::chrono::nanoseconds elapsed{0};

  // Equality on everything except wall-clock time.
  bool same_behavior(const ExecutionTrace& other) const;

  // Sorted distinct start addresses of decryptor-visible (kind read/write)
  // accesses inside the buffer.
  std::vector<std::uint32_t> buffer_read_addresses() const;
  std::vector<std::uint32_t> buffer_write_addresses() const;
};

struct ChainRun {
  ExecutionTrace trace;
  CpuState state;
  MemoryImage memory;
};

// Emulates from `entry_offset` on a fresh machine; `buffer` is viewed, not
// copied, and writes go to a private overlay. Throws std::out_of_range when
// entry_offset is not inside the buffer, LayoutError on a bad layout.
ChainRun emulate_chain(std::span<const std::uint8_t> buffer, std::size_t entry_offset,
                       const ChainConfig& config);

// Same as emulate_chain, mapping the buffer at buffer.base (unless the
// layout asks for a stack-resident buffer) and keeping only the trace.
ExecutionTrace run_chain(const DataBuffer& buffer, std::size_t entry_offset,
                         const ChainConfig& config);

}  // namespace nlemu
