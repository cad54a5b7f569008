#include "nlemu/corpus/shellcode.hpp"

#include <cmath>
#include <vector>

#include "nlemu/corpus/xor.hpp"
#include "nlemu/detector/config.hpp"
#include "nlemu/error.hpp"
#include "parts.hpp"

namespace nlemu {

using namespace corpus_detail;

namespace {

constexpr int kMaxAttempts = 256;

std::string variant_for(GetPCVariant v) {
  switch (v) {
    case GetPCVariant::call_rel_pop: return "xor_call_rel";
    case GetPCVariant::fstenv: return "xor_fstenv";
    case GetPCVariant::call_indirect_push: return "xor_call_indirect";
    case GetPCVariant::none_register_assume: return "xor_register_assume";
  }
  return "xor";
}

void validate(const GeneratorSpec& spec) {
  if (spec.payload_length < 1 || spec.payload_length > kMaxPayloadLength) {
    throw SpecError("payload_length must be in [1, 65536]");
  }
  if (!(spec.junk_density >= 0.0 && spec.junk_density <= 1.0)) {
    throw SpecError("junk_density must be in [0, 1]");
  }
}

struct Registers {
  Reg getpc;
  Reg pointer;
  Reg counter;
  LoopStyle style;
  std::optional<Reg> key;
};

Registers pick_registers(Rng& rng) {
  Registers r{};
  r.getpc = rng.pick<Reg>(kGeneralRegs);
  r.pointer = rng.pick<Reg>(kPointerRegs);
  r.style = rng.chance(0.5) ? LoopStyle::loop_ecx : LoopStyle::dec_jnz;
  if (r.style == LoopStyle::loop_ecx) {
    r.counter = Reg::ecx;
  } else {
    std::vector<Reg> options;
    for (Reg g : kGeneralRegs) {
      if (g != r.pointer) options.push_back(g);
    }
    r.counter = rng.pick<Reg>(options);
  }
  if (rng.chance(0.5)) {
    std::vector<Reg> options;
    for (Reg g : {Reg::eax, Reg::ecx, Reg::edx, Reg::ebx}) {
      if (g != r.pointer && g != r.counter) options.push_back(g);
    }
    if (!options.empty()) r.key = rng.pick<Reg>(options);
  }
  return r;
}

// Points `dst` at payload using the GetPC register `src` that holds the
// address of `ref`.
void emit_pointer_setup(Assembler& a, Rng& rng, Reg dst, Reg src, Assembler::Label payload,
                        Assembler::Label ref, bool nul_free) {
  if (nul_free) {
    // The distance is small and positive, so its negation has no zero bytes.
    if (dst != src) x86::mov_rr(a, dst, src);
    x86::alu_imm32_head(a, x86::AluOp::sub, dst);
    a.diff32(ref, payload);
    return;
  }
  if (rng.chance(0.5)) {
    x86::lea_disp32_head(a, dst, src);
  } else {
    if (dst != src) x86::mov_rr(a, dst, src);
    x86::alu_imm32_head(a, x86::AluOp::add, dst);
  }
  a.diff32(payload, ref);
}

}  // namespace

CorpusSample generate_shellcode(const GeneratorSpec& spec, std::uint64_t seed) {
  validate(spec);
  const auto plaintext = inert_payload(spec.payload_length);
  Rng rng(seed);
  Rng reg_rng(seed, spec.register_permutation_seed);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Registers regs = pick_registers(reg_rng);
    std::vector<std::uint8_t> encoded;
    const std::uint8_t key = pick_key(rng, plaintext, spec.nul_free, encoded);

    Assembler a;
    const auto ref = a.label();
    const auto payload = a.label();
    emit_junk(a, rng, spec.junk_density);
    if (spec.getpc_variant == GetPCVariant::none_register_assume) {
      a.bind_at(ref, 0);
    } else {
      const GetPCBlock block = emit_getpc(spec.getpc_variant, regs.getpc, spec.nul_free);
      a.bind_at(ref, a.size() + block.reference_offset);
      a.emit(block.bytes);
    }
    emit_junk(a, rng, spec.junk_density);
    emit_pointer_setup(a, rng, regs.pointer, regs.getpc, payload, ref, spec.nul_free);
    emit_junk(a, rng, spec.junk_density);
    emit_load_count(a, rng, regs.counter, static_cast<std::uint32_t>(spec.payload_length),
                    spec.nul_free);
    emit_junk(a, rng, spec.junk_density);
    emit_decrypt_loop(a, rng,
                      DecryptLoop{regs.pointer, regs.counter, regs.style, key, regs.key,
                                  spec.junk_density});
    a.bind(payload);
    const std::size_t payload_offset = a.size();
    a.emit(encoded);

    std::vector<std::uint8_t> bytes = a.finish();
    if (spec.nul_free && contains_nul(bytes)) continue;

    CorpusSample s;
    s.bytes = std::move(bytes);
    s.variant = variant_for(spec.getpc_variant);
    s.seed = seed;
    s.entry_offset = 0;
    s.key = key;
    s.plaintext_payload = plaintext;
    s.payload_offset = static_cast<std::uint32_t>(payload_offset);
    s.plaintext_location = PlaintextLocation::buffer;
    s.plaintext_offset = s.payload_offset;
    s.getpc_variant = spec.getpc_variant;
    s.junk_density = spec.junk_density;
    s.nul_free = spec.nul_free;
    s.replay_budget = decrypt_loop_cost(spec.payload_length) + 64;
    s.params = {{"register_permutation_seed", spec.register_permutation_seed}};

    const bool enough_reads = spec.payload_length >= ScanConfig{}.payload_read_threshold;
    const Label detectable = enough_reads ? Label::shellcode : Label::benign;
    switch (spec.getpc_variant) {
      case GetPCVariant::call_rel_pop:
        s.expected_baseline_verdict = s.expected_extended_verdict = detectable;
        s.caught_by = "CALL rel32 GetPC followed by payload reads";
        break;
      case GetPCVariant::fstenv:
        s.expected_baseline_verdict = s.expected_extended_verdict = detectable;
        s.caught_by = "FNSTENV GetPC followed by payload reads";
        break;
      case GetPCVariant::call_indirect_push:
        s.expected_baseline_verdict = Label::benign;
        s.expected_extended_verdict = detectable;
        s.caught_by = "extended profile: indirect CALL GetPC";
        break;
      case GetPCVariant::none_register_assume:
        s.assumed_register = regs.getpc;
        s.expected_baseline_verdict = s.expected_extended_verdict = Label::benign;
        s.caught_by = "not caught: no GetPC executes and the assumed register is unknown";
        break;
    }
    if (!enough_reads) s.caught_by += " (payload shorter than the read threshold)";
    return s;
  }
  throw SpecError("could not emit a NUL-free sample");
}

}  // namespace nlemu
