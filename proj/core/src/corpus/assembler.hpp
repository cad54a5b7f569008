#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "nlemu/cpu/instruction.hpp"

namespace nlemu::corpus_detail {

// Byte emitter with forward labels, used by the sample generators.
class Assembler {
 public:
  struct Label {
    std::size_t id;
  };

  Label label();
  void bind(Label l);
  void bind_at(Label l, std::size_t offset);
  std::size_t size() const { return bytes_.size(); }

  void emit(std::uint8_t b) { bytes_.push_back(b); }
  void emit(std::initializer_list<std::uint8_t> bs) { bytes_.insert(bytes_.end(), bs); }
  void emit(std::span<const std::uint8_t> bs) { bytes_.insert(bytes_.end(), bs.begin(), bs.end()); }
  void emit_u32(std::uint32_t v);

  // Displacements relative to the end of the emitted field.
  void rel8(Label target);
  void rel32(Label target);
  // 32-bit field holding position(plus) - position(minus) + addend.
  void diff32(Label plus, Label minus, std::int64_t addend = 0);

  // Resolves fixups. Throws std::logic_error on an unbound label or a rel8
  // that does not fit.
  std::vector<std::uint8_t> finish() const;

 private:
  enum class FixupKind : std::uint8_t { rel8, rel32, diff32 };
  struct Fixup {
    FixupKind kind;
    std::size_t at;
    Label a;
    Label b;
    std::int64_t addend;
  };

  std::vector<std::uint8_t> bytes_;
  std::vector<std::int64_t> labels_;
  std::vector<Fixup> fixups_;
};

// Encoders for the handful of instruction forms the generators emit. Register
// arguments use the x86 register numbering of Reg.
namespace x86 {

constexpr std::uint8_t r(Reg reg) { return static_cast<std::uint8_t>(reg); }

void push(Assembler& a, Reg reg);
void pop(Assembler& a, Reg reg);
void inc(Assembler& a, Reg reg);
void dec(Assembler& a, Reg reg);
void push_imm8(Assembler& a, std::int8_t v);
void push_imm32(Assembler& a, std::uint32_t v);
void mov_rr(Assembler& a, Reg dst, Reg src);
void mov_imm32(Assembler& a, Reg dst, std::uint32_t v);
void mov_r8_imm8(Assembler& a, Reg low_byte_of, std::uint8_t v);
void xor_rr(Assembler& a, Reg dst, Reg src);

enum class AluOp : std::uint8_t { add = 0, or_ = 1, and_ = 4, sub = 5, xor_ = 6, cmp = 7 };
void alu_imm8(Assembler& a, AluOp op, Reg dst, std::int8_t v);
void alu_imm32(Assembler& a, AluOp op, Reg dst, std::uint32_t v);
// Opcode + ModRM of `op dst, imm32`; the caller supplies the immediate.
void alu_imm32_head(Assembler& a, AluOp op, Reg dst);

// LEA dst, [base + disp32]; the caller supplies the displacement.
void lea_disp32_head(Assembler& a, Reg dst, Reg base);
// LEA dst, [base + index*scale + disp32]; the caller supplies the displacement.
void lea_sib_disp32_head(Assembler& a, Reg dst, Reg base, Reg index, unsigned scale);
void lea_disp8(Assembler& a, Reg dst, Reg base, std::int8_t disp);

void xor_byte_ptr_imm8(Assembler& a, Reg ptr, std::uint8_t key);
void xor_byte_ptr_r8(Assembler& a, Reg ptr, Reg low_byte_of);
void mov_load(Assembler& a, Reg dst, Reg ptr);
void jmp_reg(Assembler& a, Reg target);

void jmp8(Assembler& a, Assembler::Label target);
void jmp32(Assembler& a, Assembler::Label target);
void call32(Assembler& a, Assembler::Label target);
void jcc8(Assembler& a, Condition c, Assembler::Label target);
void loop8(Assembler& a, Assembler::Label target);

}  // namespace x86
}  // namespace nlemu::corpus_detail
