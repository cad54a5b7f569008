#include "nlemu/corpus/variants.hpp"

#include <algorithm>
#include <string>

#include "nlemu/corpus/background.hpp"
#include "nlemu/corpus/evasion.hpp"
#include "nlemu/corpus/shellcode.hpp"
#include "nlemu/error.hpp"
#include "parts.hpp"

namespace nlemu {

namespace {

constexpr std::uint64_t kCarrierSalt = 0xC0A5'51E5'0000'0001ull;

std::optional<GetPCVariant> decryptor_getpc(std::string_view name) {
  if (name == "xor_call_rel") return GetPCVariant::call_rel_pop;
  if (name == "xor_fstenv") return GetPCVariant::fstenv;
  if (name == "xor_call_indirect") return GetPCVariant::call_indirect_push;
  if (name == "xor_register_assume") return GetPCVariant::none_register_assume;
  return std::nullopt;
}

}  // namespace

bool is_variant(std::string_view name) {
  return std::find(kVariantNames.begin(), kVariantNames.end(), name) != kVariantNames.end();
}

bool is_decryptor_variant(std::string_view name) { return decryptor_getpc(name).has_value(); }

CorpusSample generate_variant(std::string_view name, std::uint64_t seed,
                              const VariantOptions& options) {
  CorpusSample sample;
  if (const auto getpc = decryptor_getpc(name)) {
    GeneratorSpec spec;
    spec.getpc_variant = *getpc;
    spec.payload_length = options.payload_length;
    spec.junk_density = options.junk_density;
    spec.nul_free = options.nul_free;
    sample = generate_shellcode(spec, seed);
  } else {
    constexpr std::string_view prefix = "evasion_";
    const auto kind = name.starts_with(prefix) ? parse_evasion_kind(name.substr(prefix.size()))
                                               : std::nullopt;
    if (!kind) throw SpecError("unknown variant: " + std::string(name));
    if (options.nul_free) throw SpecError("evasion variants are not emitted NUL-free");
    EvasionParams params;
    params.payload_length = options.payload_length;
    sample = emit_evasion(*kind, params, seed);
  }
  if (options.carrier_length > 0) {
    corpus_detail::Rng rng(seed, kCarrierSalt);
    const auto carrier =
        generate_background(BackgroundKind::uniform_random, options.carrier_length,
                            static_cast<std::uint64_t>(rng.engine()()));
    sample = place_in_carrier(sample, carrier, rng.below(options.carrier_length + 1));
  }
  return sample;
}

}  // namespace nlemu
