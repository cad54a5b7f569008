#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "nlemu/cpu/memory.hpp"
#include "nlemu/cpu/state.hpp"

namespace nlemu {

enum class TerminationReason : std::uint8_t {
  budget_exhausted,
  decode_error,
  memory_fault,
  loop_detected,
  clean_return,
  unmodeled_instruction,
  syscall_unmodeled,
};

inline constexpr std::size_t kTerminationReasonCount = 7;

std::string_view termination_name(TerminationReason r);
std::optional<TerminationReason> parse_termination(std::string_view name);

// Minimal native-API model for SYSENTER (args at EDX+8, after two return
// addresses) and INT 2Eh (args at EDX). Off by default.
struct SyscallModel {
  bool enabled = false;
  std::uint32_t allocate_number = 0x11;  // ZwAllocateVirtualMemory, XP SP2
  std::uint32_t copy_number = 0xBA;      // ZwReadVirtualMemory, XP SP2
  std::uint32_t max_transfer = 1u << 20;
  std::uint32_t max_scratch_regions = 4;

  friend bool operator==(const SyscallModel&, const SyscallModel&) = default;
};

inline constexpr std::uint32_t kStatusSuccess = 0x0000'0000;
inline constexpr std::uint32_t kStatusAccessViolation = 0xC000'0005;
inline constexpr std::uint32_t kStatusInvalidParameter = 0xC000'000D;
inline constexpr std::uint32_t kStatusNoMemory = 0xC000'0017;

struct StepOptions {
  SyscallModel syscalls;
  std::uint32_t scratch_base = 0x00A0'0000;
  // RET to exactly this address ends the chain with clean_return.
  std::optional<std::uint32_t> return_sentinel;

  friend bool operator==(const StepOptions&, const StepOptions&) = default;
};

// Raw material for GetPC detection, emitted by the instruction that created it.
enum class MarkerKind : std::uint8_t { call_rel, call_indirect, fpu_env_store };

struct ControlMarker {
  MarkerKind kind = MarkerKind::call_rel;
  std::uint32_t at_eip = 0;
  std::uint32_t target = 0;       // call destination, or FPU environment address
  std::uint32_t saved_value = 0;  // pushed return address, or saved FPU IP
  std::uint32_t slot_addr = 0;    // where saved_value was stored
  std::uint32_t log_index = 0;    // access_log size right after the instruction

  friend bool operator==(const ControlMarker&, const ControlMarker&) = default;
};

inline constexpr std::uint32_t kFpuEnvSize = 28;
inline constexpr std::uint32_t kFpuEnvIpOffset = 12;
inline constexpr std::uint32_t kRdtscTicksPerInstruction = 40;

struct StepOutcome {
  std::uint32_t events_begin = 0;  // [begin, end) into memory.access_log()
  std::uint32_t events_end = 0;
  std::optional<ControlMarker> marker;
  std::optional<TerminationReason> terminated;
  bool branched = false;  // EIP moved somewhere other than the next instruction
};

// Executes exactly one instruction (or one iteration of a REP string
// instruction). On success the state is advanced and `retired` incremented.
// On any other termination the register state is left as it was before the
// instruction, though memory writes already performed are kept and logged;
// clean_return is the exception, since the RET itself retires.
StepOutcome step(CpuState& state, MemoryImage& memory, const StepOptions& options = {});

}  // namespace nlemu
