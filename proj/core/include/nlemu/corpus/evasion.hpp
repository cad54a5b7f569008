#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "nlemu/corpus/sample.hpp"

namespace nlemu {

enum class EvasionKind : std::uint8_t {
  stack_scan_fs,
  syscall_copy,
  time_exhaust,
  piq_selfmod,
  fpu_dependent
};

std::string_view evasion_kind_name(EvasionKind k);
std::optional<EvasionKind> parse_evasion_kind(std::string_view name);

struct EvasionParams {
  std::size_t payload_length = 64;
  std::uint32_t marker = 0x4D454C4E;  // "NLEM"; stack_scan_fs
  std::uint32_t loop_count = 1'000'000;  // time_exhaust
  std::uint32_t allocate_syscall = 0x11;  // syscall_copy
  std::uint32_t copy_syscall = 0xBA;      // syscall_copy
  std::uint32_t region_size = 0x1000;     // syscall_copy allocation
};

// stack_scan_fs: reads the TIB stack bounds through FS and scans downward for
//   a marker dword placed just after the encoded payload, then decrypts in
//   place. No GetPC instruction.
// syscall_copy: CALL/POP GetPC, then the two-SYSENTER allocate-and-copy
//   sequence (EAX=allocate, then EAX=copy) that relocates the sample into a
//   fresh region, where the payload is decrypted.
// time_exhaust: a counted delay loop of loop_count iterations whose final
//   counter value is folded into the decryption pointer, then GetPC and the
//   decryptor.
// piq_selfmod: GetPC, then REP STOSB overwrites the first byte of the
//   following instruction with 0xF4. Hardware with a prefetch queue runs the
//   original byte; a write-through emulator halts there.
// fpu_dependent: GetPC, then FLD1/FISTP produce the integer 1 that scales
//   the decryption pointer offset.
//
// Throws ParamError on out-of-range parameters.
CorpusSample emit_evasion(EvasionKind kind, const EvasionParams& params, std::uint64_t seed);

}  // namespace nlemu
