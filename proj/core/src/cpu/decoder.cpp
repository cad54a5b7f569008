#include "nlemu/cpu/instruction.hpp"

namespace nlemu {

std::string_view mnemonic_name(Mnemonic m) {
  switch (m) {
    case Mnemonic::nop: return "nop";
    case Mnemonic::mov: return "mov";
    case Mnemonic::lea: return "lea";
    case Mnemonic::push: return "push";
    case Mnemonic::pop: return "pop";
    case Mnemonic::xchg: return "xchg";
    case Mnemonic::add: return "add";
    case Mnemonic::or_: return "or";
    case Mnemonic::and_: return "and";
    case Mnemonic::sub: return "sub";
    case Mnemonic::xor_: return "xor";
    case Mnemonic::cmp: return "cmp";
    case Mnemonic::test: return "test";
    case Mnemonic::inc: return "inc";
    case Mnemonic::dec: return "dec";
    case Mnemonic::not_: return "not";
    case Mnemonic::neg: return "neg";
    case Mnemonic::jmp: return "jmp";
    case Mnemonic::jcc: return "jcc";
    case Mnemonic::call: return "call";
    case Mnemonic::ret: return "ret";
    case Mnemonic::loop: return "loop";
    case Mnemonic::stosb: return "stosb";
    case Mnemonic::movsb: return "movsb";
    case Mnemonic::lodsb: return "lodsb";
    case Mnemonic::fldz: return "fldz";
    case Mnemonic::fnstenv: return "fnstenv";
    case Mnemonic::rdtsc: return "rdtsc";
    case Mnemonic::sysenter: return "sysenter";
    case Mnemonic::int_: return "int";
    case Mnemonic::unmodeled: return "(unmodeled)";
  }
  return "?";
}

namespace {

enum class Status : std::uint8_t { ok, invalid, truncated };

class Cursor {
 public:
  Cursor(std::span<const std::uint8_t> bytes, std::size_t start)
      : bytes_(bytes), start_(start), pos_(start) {}

  Status u8(std::uint8_t& out) {
    if (pos_ - start_ >= kMaxInstructionLength) return Status::invalid;
    if (pos_ >= bytes_.size()) return Status::truncated;
    out = bytes_[pos_++];
    return Status::ok;
  }

  Status peek(std::uint8_t& out) const {
    if (pos_ - start_ >= kMaxInstructionLength) return Status::invalid;
    if (pos_ >= bytes_.size()) return Status::truncated;
    out = bytes_[pos_];
    return Status::ok;
  }

  Status imm(unsigned size, std::uint32_t& out) {
    out = 0;
    for (unsigned i = 0; i < size; ++i) {
      std::uint8_t b = 0;
      if (auto s = u8(b); s != Status::ok) return s;
      out |= static_cast<std::uint32_t>(b) << (8 * i);
    }
    return Status::ok;
  }

  std::size_t consumed() const { return pos_ - start_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t start_;
  std::size_t pos_;
};

std::uint32_t sign_extend8(std::uint32_t v) {
  return static_cast<std::uint32_t>(static_cast<std::int32_t>(
      static_cast<std::int8_t>(static_cast<std::uint8_t>(v))));
}

std::uint32_t sign_extend16(std::uint32_t v) {
  return static_cast<std::uint32_t>(static_cast<std::int32_t>(
      static_cast<std::int16_t>(static_cast<std::uint16_t>(v))));
}

struct ModRM {
  std::uint8_t mod = 0;
  std::uint8_t reg = 0;
  std::uint8_t rm = 0;
};

Operand reg_operand(std::uint8_t reg, std::uint8_t size) {
  Operand op;
  op.kind = OperandKind::reg;
  op.reg = reg;
  op.size = size;
  return op;
}

Operand imm_operand(std::uint32_t value, std::uint8_t size) {
  Operand op;
  op.kind = OperandKind::imm;
  op.imm = value;
  op.size = size;
  return op;
}

Operand rel_operand(std::int32_t rel) {
  Operand op;
  op.kind = OperandKind::rel;
  op.rel = rel;
  op.size = 4;
  return op;
}

class Decoder {
 public:
  Decoder(std::span<const std::uint8_t> bytes, std::size_t offset)
      : cur_(bytes, offset) {}

  DecodeResult run() {
    Status s = decode();
    if (s == Status::truncated) return DecodeError{DecodeErrorKind::truncated};
    if (s == Status::invalid) return DecodeError{DecodeErrorKind::invalid_opcode};
    insn_.length = static_cast<std::uint8_t>(cur_.consumed());
    insn_.prefixes.rep = rep_;
    insn_.prefixes.operand_size = opsize_;
    if (lock_ || (repne_ && is_string(insn_.mnemonic)) ||
        (opsize_ && !allows_operand_size(insn_.mnemonic))) {
      insn_.mnemonic = Mnemonic::unmodeled;
    }
    return insn_;
  }

 private:
  static bool is_string(Mnemonic m) {
    return m == Mnemonic::stosb || m == Mnemonic::movsb || m == Mnemonic::lodsb;
  }

  static bool allows_operand_size(Mnemonic m) {
    switch (m) {
      case Mnemonic::nop:
      case Mnemonic::mov:
      case Mnemonic::add:
      case Mnemonic::or_:
      case Mnemonic::and_:
      case Mnemonic::sub:
      case Mnemonic::xor_:
      case Mnemonic::cmp:
      case Mnemonic::test:
      case Mnemonic::inc:
      case Mnemonic::dec:
      case Mnemonic::not_:
      case Mnemonic::neg:
      case Mnemonic::unmodeled:
        return true;
      default:
        return false;
    }
  }

  std::uint8_t vsize() const { return opsize_ ? 2 : 4; }

  Status modrm(ModRM& m) {
    std::uint8_t b = 0;
    if (auto s = cur_.u8(b); s != Status::ok) return s;
    m.mod = b >> 6;
    m.reg = (b >> 3) & 7;
    m.rm = b & 7;
    return Status::ok;
  }

  // Builds the r/m operand for an already-read ModRM byte.
  Status rm_operand(const ModRM& m, std::uint8_t size, Operand& out) {
    if (m.mod == 3) {
      out = reg_operand(m.rm, size);
      return Status::ok;
    }
    out = Operand{};
    out.kind = OperandKind::mem;
    out.size = size;
    out.mem.segment = segment_;
    std::uint8_t base = m.rm;
    if (m.rm == 4) {
      std::uint8_t sib = 0;
      if (auto s = cur_.u8(sib); s != Status::ok) return s;
      const std::uint8_t scale = sib >> 6;
      const std::uint8_t index = (sib >> 3) & 7;
      base = sib & 7;
      if (index != 4) {
        out.mem.index = static_cast<std::int8_t>(index);
        out.mem.scale = static_cast<std::uint8_t>(1u << scale);
      }
      if (base == 5 && m.mod == 0) {
        std::uint32_t disp = 0;
        if (auto s = cur_.imm(4, disp); s != Status::ok) return s;
        out.mem.disp = static_cast<std::int32_t>(disp);
        return Status::ok;
      }
    } else if (m.rm == 5 && m.mod == 0) {
      std::uint32_t disp = 0;
      if (auto s = cur_.imm(4, disp); s != Status::ok) return s;
      out.mem.disp = static_cast<std::int32_t>(disp);
      return Status::ok;
    }
    out.mem.base = static_cast<std::int8_t>(base);
    if (m.mod == 1) {
      std::uint32_t disp = 0;
      if (auto s = cur_.imm(1, disp); s != Status::ok) return s;
      out.mem.disp = static_cast<std::int32_t>(sign_extend8(disp));
    } else if (m.mod == 2) {
      std::uint32_t disp = 0;
      if (auto s = cur_.imm(4, disp); s != Status::ok) return s;
      out.mem.disp = static_cast<std::int32_t>(disp);
    }
    return Status::ok;
  }

  void set(Mnemonic m, Operand a = {}, Operand b = {}) {
    insn_.mnemonic = m;
    insn_.operands[0] = a;
    insn_.operands[1] = b;
    insn_.operand_count = static_cast<std::uint8_t>(
        (a.kind != OperandKind::none) + (b.kind != OperandKind::none));
  }

  // Consumes a ModRM (+SIB/disp) and marks the instruction unmodeled.
  Status unmodeled_modrm(unsigned trailing_imm = 0) {
    ModRM m;
    if (auto s = modrm(m); s != Status::ok) return s;
    Operand ignored;
    if (auto s = rm_operand(m, 4, ignored); s != Status::ok) return s;
    std::uint32_t imm = 0;
    if (auto s = cur_.imm(trailing_imm, imm); s != Status::ok) return s;
    set(Mnemonic::unmodeled);
    return Status::ok;
  }

  Status unmodeled_bytes(unsigned n) {
    std::uint32_t ignored = 0;
    for (unsigned i = 0; i < n; ++i) {
      if (auto s = cur_.imm(1, ignored); s != Status::ok) return s;
    }
    set(Mnemonic::unmodeled);
    return Status::ok;
  }

  static Mnemonic alu_mnemonic(std::uint8_t op) {
    switch (op & 7) {
      case 0: return Mnemonic::add;
      case 1: return Mnemonic::or_;
      case 4: return Mnemonic::and_;
      case 5: return Mnemonic::sub;
      case 6: return Mnemonic::xor_;
      case 7: return Mnemonic::cmp;
      default: return Mnemonic::unmodeled;  // adc, sbb
    }
  }

  Status decode_alu(std::uint8_t opcode) {
    const Mnemonic mn = alu_mnemonic(opcode >> 3);
    switch (opcode & 7) {
      case 0:
      case 1:
      case 2:
      case 3: {
        const std::uint8_t size = (opcode & 1) ? vsize() : 1;
        ModRM m;
        if (auto s = modrm(m); s != Status::ok) return s;
        Operand rm;
        if (auto s = rm_operand(m, size, rm); s != Status::ok) return s;
        const Operand r = reg_operand(m.reg, size);
        if (opcode & 2) {
          set(mn, r, rm);
        } else {
          set(mn, rm, r);
        }
        return Status::ok;
      }
      case 4: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(1, v); s != Status::ok) return s;
        set(mn, reg_operand(0, 1), imm_operand(v, 1));
        return Status::ok;
      }
      case 5: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(vsize(), v); s != Status::ok) return s;
        set(mn, reg_operand(0, vsize()), imm_operand(v, vsize()));
        return Status::ok;
      }
      default:
        return Status::invalid;
    }
  }

  Status decode_group1(std::uint8_t opcode) {
    const std::uint8_t size = (opcode == 0x81 || opcode == 0x83) ? vsize() : 1;
    ModRM m;
    if (auto s = modrm(m); s != Status::ok) return s;
    Operand rm;
    if (auto s = rm_operand(m, size, rm); s != Status::ok) return s;
    std::uint32_t v = 0;
    if (opcode == 0x81) {
      if (auto s = cur_.imm(size, v); s != Status::ok) return s;
    } else {
      if (auto s = cur_.imm(1, v); s != Status::ok) return s;
      if (opcode == 0x83) {
        v = sign_extend8(v);
        if (size == 2) v &= 0xFFFF;
      }
    }
    set(alu_mnemonic(m.reg), rm, imm_operand(v, size));
    return Status::ok;
  }

  Status decode_group3(std::uint8_t opcode) {
    const std::uint8_t size = (opcode & 1) ? vsize() : 1;
    ModRM m;
    if (auto s = modrm(m); s != Status::ok) return s;
    Operand rm;
    if (auto s = rm_operand(m, size, rm); s != Status::ok) return s;
    switch (m.reg) {
      case 0:
      case 1: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(size, v); s != Status::ok) return s;
        set(Mnemonic::test, rm, imm_operand(v, size));
        return Status::ok;
      }
      case 2: set(Mnemonic::not_, rm); return Status::ok;
      case 3: set(Mnemonic::neg, rm); return Status::ok;
      default: set(Mnemonic::unmodeled); return Status::ok;  // mul/imul/div/idiv
    }
  }

  Status decode_fpu(std::uint8_t opcode, bool waited) {
    ModRM m;
    if (auto s = modrm(m); s != Status::ok) return s;
    Operand rm;
    if (auto s = rm_operand(m, 28, rm); s != Status::ok) return s;
    if (opcode == 0xD9 && m.mod == 3 && m.reg == 5 && m.rm == 6) {
      if (waited) return Status::invalid;
      set(Mnemonic::fldz);
      return Status::ok;
    }
    if (opcode == 0xD9 && m.mod != 3 && m.reg == 6) {
      set(Mnemonic::fnstenv, rm);
      return Status::ok;
    }
    if (waited) return Status::invalid;
    set(Mnemonic::unmodeled);
    return Status::ok;
  }

  Status decode_two_byte() {
    std::uint8_t op = 0;
    if (auto s = cur_.u8(op); s != Status::ok) return s;
    if (op == 0x31) {
      set(Mnemonic::rdtsc);
      return Status::ok;
    }
    if (op == 0x34) {
      set(Mnemonic::sysenter);
      return Status::ok;
    }
    if (op >= 0x80 && op <= 0x8F) {
      std::uint32_t v = 0;
      if (auto s = cur_.imm(opsize_ ? 2 : 4, v); s != Status::ok) return s;
      if (opsize_) v = sign_extend16(v);
      return jcc(static_cast<Condition>(op & 0x0F), static_cast<std::int32_t>(v));
    }
    return Status::invalid;
  }

  Status jcc(Condition c, std::int32_t rel) {
    set(Mnemonic::jcc, rel_operand(rel));
    insn_.condition = c;
    if (c == Condition::p || c == Condition::np) insn_.mnemonic = Mnemonic::unmodeled;
    return Status::ok;
  }

  Status decode() {
    std::uint8_t op = 0;
    for (;;) {
      if (auto s = cur_.u8(op); s != Status::ok) return s;
      switch (op) {
        case 0x66: opsize_ = true; continue;
        case 0xF3: rep_ = true; continue;
        case 0xF2: repne_ = true; continue;
        case 0xF0: lock_ = true; continue;
        case 0x26:
        case 0x2E:
        case 0x36:
        case 0x3E: segment_ = Segment::none; continue;
        case 0x64: segment_ = Segment::fs; continue;
        case 0x65: segment_ = Segment::gs; continue;
        case 0x67: return Status::invalid;  // 16-bit addressing
        default: break;
      }
      break;
    }

    if (op < 0x40) {
      if ((op & 7) < 6) return decode_alu(op);
      if (op == 0x0F) return decode_two_byte();
      // push/pop segment, daa/das/aaa/aas
      set(Mnemonic::unmodeled);
      return Status::ok;
    }

    if (op >= 0x40 && op <= 0x47) {
      set(Mnemonic::inc, reg_operand(op & 7, vsize()));
      return Status::ok;
    }
    if (op >= 0x48 && op <= 0x4F) {
      set(Mnemonic::dec, reg_operand(op & 7, vsize()));
      return Status::ok;
    }
    if (op >= 0x50 && op <= 0x57) {
      set(Mnemonic::push, reg_operand(op & 7, 4));
      return Status::ok;
    }
    if (op >= 0x58 && op <= 0x5F) {
      set(Mnemonic::pop, reg_operand(op & 7, 4));
      return Status::ok;
    }
    if (op >= 0x70 && op <= 0x7F) {
      std::uint32_t v = 0;
      if (auto s = cur_.imm(1, v); s != Status::ok) return s;
      return jcc(static_cast<Condition>(op & 0x0F),
                 static_cast<std::int32_t>(sign_extend8(v)));
    }
    if (op >= 0x91 && op <= 0x97) {
      set(Mnemonic::xchg, reg_operand(0, vsize()), reg_operand(op & 7, vsize()));
      return Status::ok;
    }
    if (op >= 0xB0 && op <= 0xB7) {
      std::uint32_t v = 0;
      if (auto s = cur_.imm(1, v); s != Status::ok) return s;
      set(Mnemonic::mov, reg_operand(op & 7, 1), imm_operand(v, 1));
      return Status::ok;
    }
    if (op >= 0xB8 && op <= 0xBF) {
      std::uint32_t v = 0;
      if (auto s = cur_.imm(vsize(), v); s != Status::ok) return s;
      set(Mnemonic::mov, reg_operand(op & 7, vsize()), imm_operand(v, vsize()));
      return Status::ok;
    }
    if (op >= 0xD8 && op <= 0xDF) return decode_fpu(op, false);

    switch (op) {
      case 0x60:
      case 0x61:
      case 0x6C:
      case 0x6D:
      case 0x6E:
      case 0x6F:
        set(Mnemonic::unmodeled);
        return Status::ok;
      case 0x62:
      case 0x63:
        return unmodeled_modrm();
      case 0x68: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(vsize(), v); s != Status::ok) return s;
        set(Mnemonic::push, imm_operand(v, 4));
        return Status::ok;
      }
      case 0x69:
        return unmodeled_modrm(vsize());
      case 0x6A: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(1, v); s != Status::ok) return s;
        set(Mnemonic::push, imm_operand(sign_extend8(v), 4));
        return Status::ok;
      }
      case 0x6B:
        return unmodeled_modrm(1);
      case 0x80:
      case 0x81:
      case 0x82:
      case 0x83:
        return decode_group1(op);
      case 0x84:
      case 0x85:
      case 0x86:
      case 0x87:
      case 0x88:
      case 0x89:
      case 0x8A:
      case 0x8B: {
        const std::uint8_t size = (op & 1) ? vsize() : 1;
        ModRM m;
        if (auto s = modrm(m); s != Status::ok) return s;
        Operand rm;
        if (auto s = rm_operand(m, size, rm); s != Status::ok) return s;
        const Operand r = reg_operand(m.reg, size);
        if (op <= 0x85) {
          set(Mnemonic::test, rm, r);
        } else if (op <= 0x87) {
          set(Mnemonic::xchg, rm, r);
        } else if (op <= 0x89) {
          set(Mnemonic::mov, rm, r);
        } else {
          set(Mnemonic::mov, r, rm);
        }
        return Status::ok;
      }
      case 0x8C:
      case 0x8E:
        return unmodeled_modrm();
      case 0x8D: {
        ModRM m;
        if (auto s = modrm(m); s != Status::ok) return s;
        if (m.mod == 3) return Status::invalid;
        Operand rm;
        if (auto s = rm_operand(m, vsize(), rm); s != Status::ok) return s;
        set(Mnemonic::lea, reg_operand(m.reg, vsize()), rm);
        return Status::ok;
      }
      case 0x8F: {
        ModRM m;
        if (auto s = modrm(m); s != Status::ok) return s;
        if (m.reg != 0) return Status::invalid;
        Operand rm;
        if (auto s = rm_operand(m, 4, rm); s != Status::ok) return s;
        set(Mnemonic::pop, rm);
        return Status::ok;
      }
      case 0x90:
        set(Mnemonic::nop);
        return Status::ok;
      case 0x98:
      case 0x99:
      case 0x9C:
      case 0x9D:
      case 0x9E:
      case 0x9F:
        set(Mnemonic::unmodeled);
        return Status::ok;
      case 0x9A:
        return unmodeled_bytes(6);
      case 0x9B: {
        // FWAIT; only the FSTENV form (9B D9 /6) is modeled.
        std::uint8_t next = 0;
        if (cur_.peek(next) == Status::ok && next == 0xD9) {
          std::uint8_t d9 = 0;
          cur_.u8(d9);
          return decode_fpu(0xD9, true);
        }
        set(Mnemonic::unmodeled);
        return Status::ok;
      }
      case 0xA0:
      case 0xA1:
      case 0xA2:
      case 0xA3: {
        // MOV between the accumulator and an absolute address.
        std::uint32_t addr = 0;
        if (auto s = cur_.imm(4, addr); s != Status::ok) return s;
        const std::uint8_t size = (op & 1) ? vsize() : 1;
        Operand mem;
        mem.kind = OperandKind::mem;
        mem.size = size;
        mem.mem.segment = segment_;
        mem.mem.disp = static_cast<std::int32_t>(addr);
        if (op <= 0xA1) {
          set(Mnemonic::mov, reg_operand(0, size), mem);
        } else {
          set(Mnemonic::mov, mem, reg_operand(0, size));
        }
        return Status::ok;
      }
      case 0xA4: set(Mnemonic::movsb); return Status::ok;
      case 0xAA: set(Mnemonic::stosb); return Status::ok;
      case 0xAC: set(Mnemonic::lodsb); return Status::ok;
      case 0xA5:
      case 0xA6:
      case 0xA7:
      case 0xAB:
      case 0xAD:
      case 0xAE:
      case 0xAF:
        set(Mnemonic::unmodeled);
        return Status::ok;
      case 0xA8: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(1, v); s != Status::ok) return s;
        set(Mnemonic::test, reg_operand(0, 1), imm_operand(v, 1));
        return Status::ok;
      }
      case 0xA9: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(vsize(), v); s != Status::ok) return s;
        set(Mnemonic::test, reg_operand(0, vsize()), imm_operand(v, vsize()));
        return Status::ok;
      }
      case 0xC0:
      case 0xC1:
        return unmodeled_modrm(1);
      case 0xC2: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(2, v); s != Status::ok) return s;
        set(Mnemonic::ret, imm_operand(v, 2));
        return Status::ok;
      }
      case 0xC3:
        set(Mnemonic::ret);
        return Status::ok;
      case 0xC4:
      case 0xC5:
        return unmodeled_modrm();
      case 0xC6:
      case 0xC7: {
        const std::uint8_t size = (op & 1) ? vsize() : 1;
        ModRM m;
        if (auto s = modrm(m); s != Status::ok) return s;
        if (m.reg != 0) return Status::invalid;
        Operand rm;
        if (auto s = rm_operand(m, size, rm); s != Status::ok) return s;
        std::uint32_t v = 0;
        if (auto s = cur_.imm(size, v); s != Status::ok) return s;
        set(Mnemonic::mov, rm, imm_operand(v, size));
        return Status::ok;
      }
      case 0xC8:
        return unmodeled_bytes(3);
      case 0xC9:
      case 0xCB:
      case 0xCE:
      case 0xCF:
        set(Mnemonic::unmodeled);
        return Status::ok;
      case 0xCA:
        return unmodeled_bytes(2);
      case 0xCC:
        set(Mnemonic::int_, imm_operand(3, 1));
        return Status::ok;
      case 0xCD: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(1, v); s != Status::ok) return s;
        set(Mnemonic::int_, imm_operand(v, 1));
        return Status::ok;
      }
      case 0xD0:
      case 0xD1:
      case 0xD2:
      case 0xD3:
        return unmodeled_modrm();
      case 0xD4:
      case 0xD5:
        return unmodeled_bytes(1);
      case 0xD7:
        set(Mnemonic::unmodeled);
        return Status::ok;
      case 0xE0:
      case 0xE1:
      case 0xE3:
      case 0xE4:
      case 0xE5:
      case 0xE6:
      case 0xE7:
        return unmodeled_bytes(1);
      case 0xE2: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(1, v); s != Status::ok) return s;
        set(Mnemonic::loop, rel_operand(static_cast<std::int32_t>(sign_extend8(v))));
        return Status::ok;
      }
      case 0xE8:
      case 0xE9: {
        if (opsize_) return unmodeled_bytes(2);
        std::uint32_t v = 0;
        if (auto s = cur_.imm(4, v); s != Status::ok) return s;
        set(op == 0xE8 ? Mnemonic::call : Mnemonic::jmp,
            rel_operand(static_cast<std::int32_t>(v)));
        return Status::ok;
      }
      case 0xEA:
        return unmodeled_bytes(6);
      case 0xEB: {
        std::uint32_t v = 0;
        if (auto s = cur_.imm(1, v); s != Status::ok) return s;
        set(Mnemonic::jmp, rel_operand(static_cast<std::int32_t>(sign_extend8(v))));
        return Status::ok;
      }
      case 0xEC:
      case 0xED:
      case 0xEE:
      case 0xEF:
      case 0xF1:
      case 0xF4:
      case 0xF5:
      case 0xF8:
      case 0xF9:
      case 0xFA:
      case 0xFB:
      case 0xFC:
      case 0xFD:
        set(Mnemonic::unmodeled);
        return Status::ok;
      case 0xF6:
      case 0xF7:
        return decode_group3(op);
      case 0xFE: {
        ModRM m;
        if (auto s = modrm(m); s != Status::ok) return s;
        if (m.reg > 1) return Status::invalid;
        Operand rm;
        if (auto s = rm_operand(m, 1, rm); s != Status::ok) return s;
        set(m.reg == 0 ? Mnemonic::inc : Mnemonic::dec, rm);
        return Status::ok;
      }
      case 0xFF: {
        ModRM m;
        if (auto s = modrm(m); s != Status::ok) return s;
        const std::uint8_t size = (m.reg <= 1) ? vsize() : 4;
        Operand rm;
        if (auto s = rm_operand(m, size, rm); s != Status::ok) return s;
        switch (m.reg) {
          case 0: set(Mnemonic::inc, rm); return Status::ok;
          case 1: set(Mnemonic::dec, rm); return Status::ok;
          case 2: set(Mnemonic::call, rm); return Status::ok;
          case 4: set(Mnemonic::jmp, rm); return Status::ok;
          case 6: set(Mnemonic::push, rm); return Status::ok;
          case 3:
          case 5:
            if (m.mod == 3) return Status::invalid;
            set(Mnemonic::unmodeled);
            return Status::ok;
          default:
            return Status::invalid;
        }
      }
      default:
        return Status::invalid;
    }
  }

  Cursor cur_;
  Instruction insn_;
  Segment segment_ = Segment::none;
  bool opsize_ = false;
  bool rep_ = false;
  bool repne_ = false;
  bool lock_ = false;
};

}  // namespace

DecodeResult decode_instruction(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset >= bytes.size()) return DecodeError{DecodeErrorKind::truncated};
  return Decoder(bytes, offset).run();
}

}  // namespace nlemu
