#include "nlemu/corpus/evasion.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "nlemu/corpus/xor.hpp"
#include "nlemu/error.hpp"
#include "parts.hpp"

namespace nlemu {

using namespace corpus_detail;

std::string_view evasion_kind_name(EvasionKind k) {
  switch (k) {
    case EvasionKind::stack_scan_fs: return "stack_scan_fs";
    case EvasionKind::syscall_copy: return "syscall_copy";
    case EvasionKind::time_exhaust: return "time_exhaust";
    case EvasionKind::piq_selfmod: return "piq_selfmod";
    case EvasionKind::fpu_dependent: return "fpu_dependent";
  }
  return "?";
}

std::optional<EvasionKind> parse_evasion_kind(std::string_view name) {
  for (auto k : {EvasionKind::stack_scan_fs, EvasionKind::syscall_copy, EvasionKind::time_exhaust,
                 EvasionKind::piq_selfmod, EvasionKind::fpu_dependent}) {
    if (evasion_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

struct Build {
  std::vector<std::uint8_t> bytes;
  std::size_t payload_offset = 0;
  std::size_t plaintext_offset = 0;
};

std::vector<Reg> regs_except(std::initializer_list<Reg> excluded, std::span<const Reg> from) {
  std::vector<Reg> out;
  for (Reg r : from) {
    if (std::find(excluded.begin(), excluded.end(), r) == excluded.end()) out.push_back(r);
  }
  return out;
}

// Emits the GetPC block into `a` and binds `ref` to the address it recovers.
void emit_call_pop(Assembler& a, Reg target, Assembler::Label ref) {
  const GetPCBlock block = emit_getpc(GetPCVariant::call_rel_pop, target);
  a.bind_at(ref, a.size() + block.reference_offset);
  a.emit(block.bytes);
}

// Counter setup and an in-place XOR loop over `pointer`, then the payload.
void emit_tail(Assembler& a, Rng& rng, Reg pointer, std::uint8_t key,
               std::span<const std::uint8_t> encoded, Assembler::Label payload) {
  emit_load_count(a, rng, Reg::ecx, static_cast<std::uint32_t>(encoded.size()), false);
  emit_decrypt_loop(a, rng, DecryptLoop{pointer, Reg::ecx, LoopStyle::loop_ecx, key, {}, 0.0});
  a.bind(payload);
  a.emit(encoded);
}

Build build_stack_scan(Rng& rng, const EvasionParams& p, std::span<const std::uint8_t> plaintext,
                       std::uint8_t& key) {
  const auto len = static_cast<std::uint32_t>(plaintext.size());
  std::array<std::uint8_t, 4> marker_bytes{};
  for (int i = 0; i < 4; ++i) marker_bytes[i] = static_cast<std::uint8_t>(p.marker >> (8 * i));

  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<std::uint8_t> encoded;
    key = pick_key(rng, plaintext, false, encoded);
    Assembler a;
    const auto code = a.label();
    const auto scan = a.label();
    const auto found = a.label();
    x86::jmp32(a, code);
    const std::size_t payload_offset = a.size();
    a.emit(encoded);
    const std::size_t marker_offset = a.size();
    a.emit(marker_bytes);
    a.bind(code);
    x86::xor_rr(a, Reg::eax, Reg::eax);
    a.emit({0x64, 0x8B, 0x78, 0x04});  // mov edi, fs:[eax+4]  (stack top)
    a.emit({0x64, 0x8B, 0x58, 0x08});  // mov ebx, fs:[eax+8]  (stack limit)
    x86::mov_imm32(a, Reg::eax, p.marker - 1);  // the literal marker never appears in code
    x86::inc(a, Reg::eax);
    x86::alu_imm8(a, x86::AluOp::sub, Reg::edi, 4);
    a.bind(scan);
    a.emit({0x39, 0x07});  // cmp [edi], eax
    x86::jcc8(a, Condition::e, found);
    x86::dec(a, Reg::edi);
    a.emit({0x39, 0xDF});  // cmp edi, ebx
    x86::jcc8(a, Condition::ae, scan);
    a.emit(0xF4);
    a.bind(found);
    x86::lea_disp32_head(a, Reg::esi, Reg::edi);
    a.emit_u32(static_cast<std::uint32_t>(-static_cast<std::int64_t>(len)));
    x86::mov_rr(a, Reg::edx, Reg::esi);
    emit_load_count(a, rng, Reg::ecx, len, false);
    emit_decrypt_loop(a, rng, DecryptLoop{Reg::esi, Reg::ecx, LoopStyle::loop_ecx, key, {}, 0.0});
    x86::jmp_reg(a, Reg::edx);
    std::vector<std::uint8_t> bytes = a.finish();

    // The downward scan from the end must meet the planted marker first.
    std::size_t hit = bytes.size();
    for (std::size_t pos = bytes.size() - 4 + 1; pos-- > 0;) {
      if (std::equal(marker_bytes.begin(), marker_bytes.end(), bytes.begin() + static_cast<std::ptrdiff_t>(pos))) {
        hit = pos;
        break;
      }
    }
    if (hit == marker_offset) return {std::move(bytes), payload_offset, payload_offset};
  }
  throw ParamError("marker also occurs in the scanning code");
}

Build build_syscall_copy(Rng& rng, const EvasionParams& p, std::span<const std::uint8_t> plaintext,
                         std::uint8_t& key) {
  std::vector<std::uint8_t> encoded;
  key = pick_key(rng, plaintext, false, encoded);
  const Reg pointer = rng.pick<Reg>(kPointerRegs);

  Assembler a;
  const auto start = a.label();
  const auto ref = a.label();
  const auto ret1 = a.label();
  const auto ret2 = a.label();
  const auto payload = a.label();
  const auto end = a.label();
  a.bind(start);
  emit_call_pop(a, Reg::esi, ref);
  x86::push_imm32(a, p.region_size);  // region size variable
  x86::mov_rr(a, Reg::ebx, Reg::esp);
  x86::push_imm8(a, 0);  // out_base variable
  x86::mov_rr(a, Reg::edi, Reg::esp);

  x86::xor_rr(a, Reg::eax, Reg::eax);
  x86::push_imm8(a, 0x40);  // PAGE_EXECUTE_READWRITE
  x86::push_imm32(a, 0x1000);  // MEM_COMMIT
  x86::push(a, Reg::ebx);
  x86::push(a, Reg::eax);
  x86::push(a, Reg::edi);
  x86::push_imm8(a, -1);
  x86::lea_disp32_head(a, Reg::ecx, Reg::esi);
  a.diff32(ret1, ref);
  x86::push(a, Reg::ecx);
  x86::push(a, Reg::ecx);
  x86::mov_rr(a, Reg::edx, Reg::esp);
  x86::mov_imm32(a, Reg::eax, p.allocate_syscall);
  a.emit({0x0F, 0x34});
  a.bind(ret1);

  x86::push(a, Reg::eax);
  a.emit(0x68);  // push sample length
  a.diff32(end, start);
  a.emit({0xFF, 0x37});  // push dword [edi]
  x86::lea_disp32_head(a, Reg::ecx, Reg::esi);
  a.diff32(start, ref);
  x86::push(a, Reg::ecx);
  x86::push_imm8(a, -1);
  x86::lea_disp32_head(a, Reg::ecx, Reg::esi);
  a.diff32(ret2, ref);
  x86::push(a, Reg::ecx);
  x86::push(a, Reg::ecx);
  x86::mov_rr(a, Reg::edx, Reg::esp);
  x86::mov_imm32(a, Reg::eax, p.copy_syscall);
  a.emit({0x0F, 0x34});
  a.bind(ret2);

  x86::mov_load(a, pointer, Reg::edi);
  x86::alu_imm32_head(a, x86::AluOp::add, pointer);
  a.diff32(payload, start);
  emit_load_count(a, rng, Reg::ecx, static_cast<std::uint32_t>(encoded.size()), false);
  emit_decrypt_loop(a, rng, DecryptLoop{pointer, Reg::ecx, LoopStyle::loop_ecx, key, {}, 0.0});
  x86::alu_imm32(a, x86::AluOp::sub, pointer, static_cast<std::uint32_t>(encoded.size()));
  x86::jmp_reg(a, pointer);
  a.bind(payload);
  const std::size_t payload_offset = a.size();
  a.emit(encoded);
  a.bind(end);

  std::vector<std::uint8_t> bytes = a.finish();
  if (bytes.size() > p.region_size) throw ParamError("region_size is smaller than the sample");
  return {std::move(bytes), payload_offset, payload_offset};
}

Build build_time_exhaust(Rng& rng, const EvasionParams& p, std::span<const std::uint8_t> plaintext,
                         std::uint8_t& key) {
  std::vector<std::uint8_t> encoded;
  key = pick_key(rng, plaintext, false, encoded);
  const Reg getpc = rng.pick<Reg>(regs_except({Reg::ebx}, kGeneralRegs));
  const Reg pointer = rng.pick<Reg>(kPointerRegs);

  Assembler a;
  const auto delay = a.label();
  const auto ref = a.label();
  const auto payload = a.label();
  x86::xor_rr(a, Reg::ebx, Reg::ebx);
  x86::mov_imm32(a, Reg::ecx, p.loop_count);
  a.bind(delay);
  x86::inc(a, Reg::ebx);
  a.emit({0x89, 0x5C, 0x24, 0xFC});  // mov [esp-4], ebx
  x86::loop8(a, delay);
  emit_call_pop(a, getpc, ref);
  // pointer = getpc + ebx + (payload - ref) - loop_count
  x86::lea_sib_disp32_head(a, pointer, getpc, Reg::ebx, 1);
  a.diff32(payload, ref, -static_cast<std::int64_t>(p.loop_count));
  emit_tail(a, rng, pointer, key, encoded, payload);
  std::vector<std::uint8_t> bytes = a.finish();
  const std::size_t payload_offset = bytes.size() - encoded.size();
  return {std::move(bytes), payload_offset, payload_offset};
}

Build build_piq(Rng& rng, std::span<const std::uint8_t> plaintext, std::uint8_t& key) {
  std::vector<std::uint8_t> encoded;
  key = pick_key(rng, plaintext, false, encoded);
  const Reg getpc = rng.pick<Reg>(regs_except({Reg::eax, Reg::ecx, Reg::edi}, kGeneralRegs));
  const Reg pointer = rng.pick<Reg>(kPointerRegs);

  Assembler a;
  const auto ref = a.label();
  const auto victim = a.label();
  const auto payload = a.label();
  emit_call_pop(a, getpc, ref);
  x86::lea_disp32_head(a, Reg::edi, getpc);
  a.diff32(victim, ref);
  x86::mov_r8_imm8(a, Reg::eax, 0xF4);
  x86::push_imm8(a, 1);
  x86::pop(a, Reg::ecx);
  a.emit({0xF3, 0xAA});  // rep stosb
  a.bind(victim);
  x86::lea_disp32_head(a, pointer, getpc);
  a.diff32(payload, ref);
  emit_tail(a, rng, pointer, key, encoded, payload);
  std::vector<std::uint8_t> bytes = a.finish();
  const std::size_t payload_offset = bytes.size() - encoded.size();
  return {std::move(bytes), payload_offset, payload_offset};
}

Build build_fpu(Rng& rng, std::span<const std::uint8_t> plaintext, std::uint8_t& key) {
  std::vector<std::uint8_t> encoded;
  key = pick_key(rng, plaintext, false, encoded);
  const Reg getpc = rng.pick<Reg>(regs_except({Reg::ebx}, kGeneralRegs));
  const Reg pointer = rng.pick<Reg>(kPointerRegs);

  Assembler a;
  const auto ref = a.label();
  const auto payload = a.label();
  emit_call_pop(a, getpc, ref);
  a.emit({0xD9, 0xE8});              // fld1
  a.emit({0xDB, 0x5C, 0x24, 0xFC});  // fistp dword [esp-4]
  a.emit({0x8B, 0x5C, 0x24, 0xFC});  // mov ebx, [esp-4]
  // pointer = getpc + ebx*4 + (payload - ref) - 4
  x86::lea_sib_disp32_head(a, pointer, getpc, Reg::ebx, 4);
  a.diff32(payload, ref, -4);
  emit_tail(a, rng, pointer, key, encoded, payload);
  std::vector<std::uint8_t> bytes = a.finish();
  const std::size_t payload_offset = bytes.size() - encoded.size();
  return {std::move(bytes), payload_offset, payload_offset};
}

void validate(EvasionKind kind, const EvasionParams& p) {
  if (p.payload_length < 1 || p.payload_length > kMaxPayloadLength) {
    throw ParamError("payload_length must be in [1, 65536]");
  }
  if (kind == EvasionKind::time_exhaust && p.loop_count == 0) {
    throw ParamError("loop_count must be positive");
  }
  if (kind == EvasionKind::stack_scan_fs && p.marker == 0) {
    throw ParamError("marker must be nonzero");
  }
  if (kind == EvasionKind::syscall_copy) {
    if (p.allocate_syscall == p.copy_syscall) throw ParamError("syscall numbers must differ");
    if (p.region_size == 0) throw ParamError("region_size must be positive");
  }
}

}  // namespace

CorpusSample emit_evasion(EvasionKind kind, const EvasionParams& params, std::uint64_t seed) {
  validate(kind, params);
  const auto plaintext = inert_payload(params.payload_length);
  Rng rng(seed);
  std::uint8_t key = 0;

  CorpusSample s;
  s.variant = "evasion_" + std::string(evasion_kind_name(kind));
  s.seed = seed;
  s.plaintext_payload = plaintext;
  s.expected_baseline_verdict = Label::benign;
  s.expected_extended_verdict = Label::benign;
  const std::uint64_t loop_cost = decrypt_loop_cost(params.payload_length);

  Build b;
  switch (kind) {
    case EvasionKind::stack_scan_fs:
      b = build_stack_scan(rng, params, plaintext, key);
      s.params = {{"marker", params.marker}};
      s.requires_stack_resident = true;
      s.replay_budget = loop_cost + 8 * b.bytes.size() + 64;
      {
        // The marker scan reads one dword per position from the buffer end
        // down to the marker, then decryption reads every payload byte below
        // it. A surrounding carrier only adds scan positions.
        const std::size_t marker_offset = b.payload_offset + params.payload_length;
        const std::size_t scan_reads = b.bytes.size() - 4 - marker_offset + 1;
        if (scan_reads + params.payload_length >= ScanConfig{}.payload_read_threshold) {
          s.expected_extended_verdict = Label::shellcode;
        }
      }
      s.caught_by = "extended profile: TIB stack probe followed by buffer reads";
      break;
    case EvasionKind::syscall_copy:
      b = build_syscall_copy(rng, params, plaintext, key);
      s.params = {{"allocate_syscall", params.allocate_syscall},
                  {"copy_syscall", params.copy_syscall},
                  {"region_size", params.region_size}};
      s.plaintext_location = PlaintextLocation::scratch;
      s.requires_syscall_model = true;
      s.replay_budget = loop_cost + 128;
      s.caught_by =
          "not caught: dies at SYSENTER unless syscalls are modeled; modeled copies are not "
          "decryptor reads";
      break;
    case EvasionKind::time_exhaust:
      b = build_time_exhaust(rng, params, plaintext, key);
      s.params = {{"loop_count", params.loop_count}};
      s.replay_budget = 3 * std::uint64_t{params.loop_count} + loop_cost + 64;
      s.caught_by = "not caught: the delay loop outlasts the instruction budget";
      break;
    case EvasionKind::piq_selfmod:
      b = build_piq(rng, plaintext, key);
      s.plaintext_location = PlaintextLocation::none;
      s.replay_budget = loop_cost + 64;
      s.caught_by = "not caught: write-through fetch executes the overwritten byte";
      break;
    case EvasionKind::fpu_dependent:
      b = build_fpu(rng, plaintext, key);
      s.plaintext_location = PlaintextLocation::none;
      s.replay_budget = loop_cost + 64;
      s.caught_by = "not caught: FLD1/FISTP are not emulated";
      break;
  }
  s.bytes = std::move(b.bytes);
  s.key = key;
  s.payload_offset = static_cast<std::uint32_t>(b.payload_offset);
  s.plaintext_offset = static_cast<std::uint32_t>(b.plaintext_offset);
  if (s.plaintext_location == PlaintextLocation::none) s.plaintext_offset = 0;
  if (kind == EvasionKind::syscall_copy || kind == EvasionKind::time_exhaust ||
      kind == EvasionKind::piq_selfmod || kind == EvasionKind::fpu_dependent) {
    s.getpc_variant = GetPCVariant::call_rel_pop;
  }
  return s;
}

}  // namespace nlemu
