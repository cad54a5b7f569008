#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "nlemu/corpus/sample.hpp"

namespace nlemu {

inline constexpr std::array<std::string_view, 9> kVariantNames = {
    "xor_call_rel",          "xor_fstenv",           "xor_call_indirect",
    "xor_register_assume",   "evasion_stack_scan_fs", "evasion_syscall_copy",
    "evasion_time_exhaust",  "evasion_piq_selfmod",  "evasion_fpu_dependent"};

bool is_variant(std::string_view name);
bool is_decryptor_variant(std::string_view name);

struct VariantOptions {
  std::size_t payload_length = 64;
  double junk_density = 0.25;
  bool nul_free = false;
  std::size_t carrier_length = 0;  // > 0: embed in seeded random bytes at a seeded offset
};

// Generates one sample of a named variant. Throws SpecError for an unknown
// name or for nul_free on an evasion variant, and whatever the underlying
// generator throws.
CorpusSample generate_variant(std::string_view name, std::uint64_t seed,
                              const VariantOptions& options = {});

}  // namespace nlemu
