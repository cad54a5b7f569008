#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string_view>

#include "nlemu/cpu/chain.hpp"

namespace nlemu {

// Which GetPC idioms count as a GetPC event.
struct GetPCModes {
  bool call_rel = true;
  bool fstenv = true;
  bool call_indirect = false;
  bool stack_scan_fs = false;

  static GetPCModes baseline() { return {}; }
  static GetPCModes extended() { return {true, true, true, true}; }

  friend bool operator==(const GetPCModes&, const GetPCModes&) = default;
};

enum class Profile : std::uint8_t { baseline, extended };

std::string_view profile_name(Profile p);
std::optional<Profile> parse_profile(std::string_view name);

struct ScanConfig {
  std::uint32_t payload_read_threshold = 8;
  std::uint64_t instruction_budget = 8192;
  std::chrono::milliseconds wall_budget{2000};
  GetPCModes getpc_modes;
  std::uint32_t loop_guard_window = 64;
  RegisterPolicy register_policy;
  MemoryLayoutConfig layout;
  SyscallModel syscalls;
  unsigned jobs = 1;

  // Libemu-parity heuristics: CALL rel32 into the buffer or FSTENV.
  static ScanConfig baseline();
  // Adds indirect-CALL and TIB stack-probe GetPC, and maps the buffer as
  // stack-resident so a stack scan can find it.
  static ScanConfig extended();
  static ScanConfig for_profile(Profile p);

  // Throws ParamError when a value is out of range.
  void validate() const;
  ChainConfig chain_config() const;

  friend bool operator==(const ScanConfig&, const ScanConfig&) = default;
};

}  // namespace nlemu
