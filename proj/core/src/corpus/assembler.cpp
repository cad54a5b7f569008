#include "assembler.hpp"

#include <stdexcept>

namespace nlemu::corpus_detail {

Assembler::Label Assembler::label() {
  labels_.push_back(-1);
  return Label{labels_.size() - 1};
}

void Assembler::bind(Label l) { labels_.at(l.id) = static_cast<std::int64_t>(bytes_.size()); }

void Assembler::bind_at(Label l, std::size_t offset) {
  labels_.at(l.id) = static_cast<std::int64_t>(offset);
}

void Assembler::emit_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Assembler::rel8(Label target) {
  fixups_.push_back({FixupKind::rel8, bytes_.size(), target, target, 0});
  bytes_.push_back(0);
}

void Assembler::rel32(Label target) {
  fixups_.push_back({FixupKind::rel32, bytes_.size(), target, target, 0});
  emit_u32(0);
}

void Assembler::diff32(Label plus, Label minus, std::int64_t addend) {
  fixups_.push_back({FixupKind::diff32, bytes_.size(), plus, minus, addend});
  emit_u32(0);
}

std::vector<std::uint8_t> Assembler::finish() const {
  std::vector<std::uint8_t> out = bytes_;
  auto pos = [this](Label l) {
    const std::int64_t p = labels_.at(l.id);
    if (p < 0) throw std::logic_error("unbound label");
    return p;
  };
  auto put32 = [&out](std::size_t at, std::int64_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (std::size_t i = 0; i < 4; ++i) out[at + i] = static_cast<std::uint8_t>(u >> (8 * i));
  };
  for (const Fixup& f : fixups_) {
    switch (f.kind) {
      case FixupKind::rel8: {
        const std::int64_t d = pos(f.a) - static_cast<std::int64_t>(f.at + 1);
        if (d < -128 || d > 127) throw std::logic_error("rel8 out of range");
        out[f.at] = static_cast<std::uint8_t>(static_cast<std::int8_t>(d));
        break;
      }
      case FixupKind::rel32:
        put32(f.at, pos(f.a) - static_cast<std::int64_t>(f.at + 4));
        break;
      case FixupKind::diff32:
        put32(f.at, pos(f.a) - pos(f.b) + f.addend);
        break;
    }
  }
  return out;
}

namespace x86 {

namespace {

std::uint8_t modrm(unsigned mod, unsigned reg, unsigned rm) {
  return static_cast<std::uint8_t>((mod << 6) | (reg << 3) | rm);
}

void require_plain_base(Reg ptr) {
  if (ptr == Reg::esp || ptr == Reg::ebp) {
    throw std::logic_error("register-indirect form needs a SIB or displacement");
  }
}

}  // namespace

void push(Assembler& a, Reg reg) { a.emit(static_cast<std::uint8_t>(0x50 + r(reg))); }
void pop(Assembler& a, Reg reg) { a.emit(static_cast<std::uint8_t>(0x58 + r(reg))); }
void inc(Assembler& a, Reg reg) { a.emit(static_cast<std::uint8_t>(0x40 + r(reg))); }
void dec(Assembler& a, Reg reg) { a.emit(static_cast<std::uint8_t>(0x48 + r(reg))); }

void push_imm8(Assembler& a, std::int8_t v) { a.emit({0x6A, static_cast<std::uint8_t>(v)}); }

void push_imm32(Assembler& a, std::uint32_t v) {
  a.emit(0x68);
  a.emit_u32(v);
}

void mov_rr(Assembler& a, Reg dst, Reg src) { a.emit({0x89, modrm(3, r(src), r(dst))}); }

void mov_imm32(Assembler& a, Reg dst, std::uint32_t v) {
  a.emit(static_cast<std::uint8_t>(0xB8 + r(dst)));
  a.emit_u32(v);
}

void mov_r8_imm8(Assembler& a, Reg low_byte_of, std::uint8_t v) {
  if (r(low_byte_of) > 3) throw std::logic_error("no low-byte register");
  a.emit({static_cast<std::uint8_t>(0xB0 + r(low_byte_of)), v});
}

void xor_rr(Assembler& a, Reg dst, Reg src) { a.emit({0x31, modrm(3, r(src), r(dst))}); }

void alu_imm8(Assembler& a, AluOp op, Reg dst, std::int8_t v) {
  a.emit({0x83, modrm(3, static_cast<unsigned>(op), r(dst)), static_cast<std::uint8_t>(v)});
}

void alu_imm32_head(Assembler& a, AluOp op, Reg dst) {
  a.emit({0x81, modrm(3, static_cast<unsigned>(op), r(dst))});
}

void alu_imm32(Assembler& a, AluOp op, Reg dst, std::uint32_t v) {
  alu_imm32_head(a, op, dst);
  a.emit_u32(v);
}

void lea_disp32_head(Assembler& a, Reg dst, Reg base) {
  a.emit({0x8D, modrm(2, r(dst), r(base))});
  if (base == Reg::esp) a.emit(0x24);
}

void lea_sib_disp32_head(Assembler& a, Reg dst, Reg base, Reg index, unsigned scale) {
  if (index == Reg::esp) throw std::logic_error("ESP cannot be an index");
  unsigned ss = 0;
  while ((1u << ss) < scale) ++ss;
  a.emit({0x8D, modrm(2, r(dst), 4), modrm(ss, r(index), r(base))});
}

void lea_disp8(Assembler& a, Reg dst, Reg base, std::int8_t disp) {
  a.emit({0x8D, modrm(1, r(dst), r(base))});
  if (base == Reg::esp) a.emit(0x24);
  a.emit(static_cast<std::uint8_t>(disp));
}

void xor_byte_ptr_imm8(Assembler& a, Reg ptr, std::uint8_t key) {
  require_plain_base(ptr);
  a.emit({0x80, modrm(0, 6, r(ptr)), key});
}

void xor_byte_ptr_r8(Assembler& a, Reg ptr, Reg low_byte_of) {
  require_plain_base(ptr);
  if (r(low_byte_of) > 3) throw std::logic_error("no low-byte register");
  a.emit({0x30, modrm(0, r(low_byte_of), r(ptr))});
}

void mov_load(Assembler& a, Reg dst, Reg ptr) {
  require_plain_base(ptr);
  a.emit({0x8B, modrm(0, r(dst), r(ptr))});
}

void jmp_reg(Assembler& a, Reg target) { a.emit({0xFF, modrm(3, 4, r(target))}); }

void jmp8(Assembler& a, Assembler::Label target) {
  a.emit(0xEB);
  a.rel8(target);
}

void jmp32(Assembler& a, Assembler::Label target) {
  a.emit(0xE9);
  a.rel32(target);
}

void call32(Assembler& a, Assembler::Label target) {
  a.emit(0xE8);
  a.rel32(target);
}

void jcc8(Assembler& a, Condition c, Assembler::Label target) {
  a.emit(static_cast<std::uint8_t>(0x70 + static_cast<unsigned>(c)));
  a.rel8(target);
}

void loop8(Assembler& a, Assembler::Label target) {
  a.emit(0xE2);
  a.rel8(target);
}

}  // namespace x86
}  // namespace nlemu::corpus_detail
