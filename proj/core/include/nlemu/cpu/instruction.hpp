#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>

namespace nlemu {

enum class Reg : std::uint8_t { eax, ecx, edx, ebx, esp, ebp, esi, edi };

inline constexpr std::array<std::string_view, 8> kRegNames = {
    "eax", "ecx", "edx", "ebx", "esp", "ebp", "esi", "edi"};

constexpr std::string_view reg_name(Reg r) {
  return kRegNames[static_cast<std::size_t>(r)];
}

constexpr std::optional<Reg> parse_reg(std::string_view name) {
  for (std::size_t i = 0; i < kRegNames.size(); ++i) {
    if (kRegNames[i] == name) return static_cast<Reg>(i);
  }
  return std::nullopt;
}

enum class Mnemonic : std::uint8_t {
  nop,
  mov,
  lea,
  push,
  pop,
  xchg,
  add,
  or_,
  and_,
  sub,
  xor_,
  cmp,
  test,
  inc,
  dec,
  not_,
  neg,
  jmp,
  jcc,
  call,
  ret,
  loop,
  stosb,
  movsb,
  lodsb,
  fldz,
  fnstenv,
  rdtsc,
  sysenter,
  int_,
  // Decoded with a correct length but not emulated (FPU
  // arithmetic, ADC/SBB, MUL/DIV, HLT, parity branches, ...).
  unmodeled,
};

std::string_view mnemonic_name(Mnemonic m);

// Jcc condition in opcode order (low nibble of 0x70..0x7F).
enum class Condition : std::uint8_t {
  o, no, b, ae, e, ne, be, a, s, ns, p, np, l, ge, le, g
};

enum class Segment : std::uint8_t { none, fs, gs };

enum class OperandKind : std::uint8_t { none, reg, imm, mem, rel };

struct MemExpr {
  std::int8_t base = -1;   // register index or -1
  std::int8_t index = -1;  // register index or -1
  std::uint8_t scale = 1;
  std::int32_t disp = 0;
  Segment segment = Segment::none;

  friend bool operator==(const MemExpr&, const MemExpr&) = default;
};

struct Operand {
  OperandKind kind = OperandKind::none;
  std::uint8_t size = 0;  // 1, 2 or 4 bytes; 0 when not applicable
  // For 8-bit register operands this uses the x86 encoding
  // (0..3 = AL,CL,DL,BL; 4..7 = AH,CH,DH,BH).
  std::uint8_t reg = 0;
  std::uint32_t imm = 0;
  std::int32_t rel = 0;
  MemExpr mem;

  friend bool operator==(const Operand&, const Operand&) = default;
};

struct Prefixes {
  bool rep = false;
  bool operand_size = false;

  friend bool operator==(const Prefixes&, const Prefixes&) = default;
};

struct Instruction {
  Mnemonic mnemonic = Mnemonic::nop;
  Condition condition = Condition::o;  // meaningful for jcc only
  std::uint8_t length = 0;
  std::uint8_t operand_count = 0;
  std::array<Operand, 2> operands{};
  Prefixes prefixes;

  const Operand& dst() const { return operands[0]; }
  const Operand& src() const { return operands[1]; }

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

inline constexpr std::size_t kMaxInstructionLength = 15;

enum class DecodeErrorKind : std::uint8_t { invalid_opcode, truncated };

struct DecodeError {
  DecodeErrorKind kind = DecodeErrorKind::invalid_opcode;

  friend bool operator==(const DecodeError&, const DecodeError&) = default;
};

using DecodeResult = std::variant<Instruction, DecodeError>;

// Decodes one IA-32 instruction (32-bit code segment) starting at `offset`.
// Opcodes outside the supported subset yield DecodeError::invalid_opcode;
// an instruction running past the end of `bytes` yields truncated.
DecodeResult decode_instruction(std::span<const std::uint8_t> bytes,
                                std::size_t offset);

}  // namespace nlemu
