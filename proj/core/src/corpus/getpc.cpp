#include "nlemu/corpus/getpc.hpp"

#include "nlemu/error.hpp"

namespace nlemu {

std::string_view getpc_variant_name(GetPCVariant v) {
  switch (v) {
    case GetPCVariant::call_rel_pop: return "call_rel_pop";
    case GetPCVariant::fstenv: return "fstenv";
    case GetPCVariant::call_indirect_push: return "call_indirect_push";
    case GetPCVariant::none_register_assume: return "none_register_assume";
  }
  return "?";
}

std::optional<GetPCVariant> parse_getpc_variant(std::string_view name) {
  for (auto v : {GetPCVariant::call_rel_pop, GetPCVariant::fstenv,
                 GetPCVariant::call_indirect_push, GetPCVariant::none_register_assume}) {
    if (getpc_variant_name(v) == name) return v;
  }
  return std::nullopt;
}

GetPCBlock emit_getpc(GetPCVariant variant, Reg target, bool nul_free) {
  if (target == Reg::esp) throw UnsupportedRegister("ESP cannot receive a GetPC result");
  const auto r = static_cast<std::uint8_t>(target);
  const auto pop_r = static_cast<std::uint8_t>(0x58 + r);
  const auto push_r = static_cast<std::uint8_t>(0x50 + r);
  switch (variant) {
    case GetPCVariant::call_rel_pop:
      if (nul_free) return {{0xEB, 0x03, pop_r, 0xEB, 0x05, 0xE8, 0xF8, 0xFF, 0xFF, 0xFF}, 10};
      return {{0xE8, 0x00, 0x00, 0x00, 0x00, pop_r}, 5};
    case GetPCVariant::fstenv:
      return {{0xD9, 0xEE, 0xD9, 0x74, 0x24, 0xF4, pop_r}, 0};
    case GetPCVariant::call_indirect_push:
      return {{0x68, pop_r, push_r, 0x90, 0xC3, 0xFF, 0xD4}, 7};
    case GetPCVariant::none_register_assume:
      return {{}, 0};
  }
  return {};
}

}  // namespace nlemu
