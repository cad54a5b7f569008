#pragma once

#include <cstdint>

#include "nlemu/corpus/getpc.hpp"
#include "nlemu/corpus/sample.hpp"

namespace nlemu {

struct GeneratorSpec {
  GetPCVariant getpc_variant = GetPCVariant::call_rel_pop;
  std::size_t payload_length = 64;
  double junk_density = 0.0;  // chance of each further junk unit in a gap
  std::uint64_t register_permutation_seed = 0;
  bool nul_free = false;  // no 0x00 anywhere in the emitted sample
};

// [junk] GetPC [junk] pointer setup [junk] counter setup [junk] XOR loop,
// followed by the XOR-encoded inert payload. Entry is offset 0. Throws
// SpecError when the spec is out of range.
CorpusSample generate_shellcode(const GeneratorSpec& spec, std::uint64_t seed);

}  // namespace nlemu
