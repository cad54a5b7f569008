#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "nlemu/cpu/instruction.hpp"

namespace nlemu {

enum class GetPCVariant : std::uint8_t { call_rel_pop, fstenv, call_indirect_push, none_register_assume };

std::string_view getpc_variant_name(GetPCVariant v);
std::optional<GetPCVariant> parse_getpc_variant(std::string_view name);

// An emitted GetPC block. After the block runs, the target register holds
// the address of the block byte at `reference_offset` (which may equal
// bytes.size(), the first byte after the block).
struct GetPCBlock {
  std::vector<std::uint8_t> bytes;
  std::size_t reference_offset = 0;
};

// call_rel_pop:        E8 00000000; POP r           -> r = address of the POP
//   (nul_free:         EB 03; POP r; EB 05; E8 F8FFFFFF -> r = block end)
// fstenv:              FLDZ; FNSTENV [ESP-12]; POP r  -> r = address of FLDZ
// call_indirect_push:  PUSH imm32 {POP r; PUSH r; NOP; RET}; CALL ESP
//                                                     -> r = block end
// none_register_assume: no bytes; r is assumed to already hold the address
//   of the block position.
// Throws UnsupportedRegister for ESP.
GetPCBlock emit_getpc(GetPCVariant variant, Reg target, bool nul_free = false);

}  // namespace nlemu
