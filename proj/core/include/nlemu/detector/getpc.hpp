#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "nlemu/cpu/chain.hpp"
#include "nlemu/detector/config.hpp"

namespace nlemu {

enum class GetPCKind : std::uint8_t { call_rel, call_indirect, fstenv, fs_stack_probe };

std::string_view getpc_kind_name(GetPCKind k);
std::optional<GetPCKind> parse_getpc_kind(std::string_view name);

struct GetPCEvent {
  GetPCKind kind = GetPCKind::call_rel;
  std::uint32_t at_eip = 0;
  // Return address, saved FPU instruction pointer, or TIB stack bound.
  std::uint32_t recovered_address = 0;
  // Position in the access log; reads at or after this index follow the event.
  std::uint32_t log_index = 0;

  friend bool operator==(const GetPCEvent&, const GetPCEvent&) = default;
};

// GetPC events of the enabled kinds, in execution order:
//  - call_rel: CALL rel32 whose destination lies in the buffer;
//  - call_indirect: indirect CALL into buffer or stack whose pushed return
//    address is read back later;
//  - fstenv: FNSTENV/FSTENV saving an FPU IP inside buffer or stack, with the
//    saved-IP field read back later;
//  - fs_stack_probe: first read of FS:[4] and first read of FS:[8].
std::vector<GetPCEvent> detect_getpc_events(const ExecutionTrace& trace, const GetPCModes& modes);

}  // namespace nlemu
