#include "parts.hpp"

#include <algorithm>

namespace nlemu::corpus_detail {

Rng::Rng(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  engine_.seed(seq);
}

std::size_t Rng::below(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

bool Rng::chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_) < p; }

std::uint8_t Rng::nonzero_byte() { return static_cast<std::uint8_t>(1 + below(255)); }

void emit_junk(Assembler& a, Rng& rng, double density) {
  for (std::size_t unit = 0; unit < kMaxJunkUnitsPerGap && rng.chance(density); ++unit) {
    const Reg r = rng.pick<Reg>(kGeneralRegs);
    switch (rng.below(7)) {
      case 0:
        a.emit(0x90);
        break;
      case 1:
        a.emit({0x87, static_cast<std::uint8_t>(0xC0 | (x86::r(r) << 3) | x86::r(r))});
        break;
      case 2:
        x86::mov_rr(a, r, r);
        break;
      case 3:
        x86::inc(a, r);
        x86::dec(a, r);
        break;
      case 4:
        x86::push(a, r);
        x86::pop(a, r);
        break;
      case 5: {
        const auto v = static_cast<std::int8_t>(1 + rng.below(127));
        x86::alu_imm8(a, x86::AluOp::add, r, v);
        x86::alu_imm8(a, x86::AluOp::sub, r, v);
        break;
      }
      default: {
        const Reg s = rng.pick<Reg>(kGeneralRegs);
        const auto m = static_cast<std::uint8_t>(0xC0 | (x86::r(s) << 3) | x86::r(r));
        a.emit({0x87, m, 0x87, m});
        break;
      }
    }
  }
}

std::uint8_t pick_key(Rng& rng, std::span<const std::uint8_t> plaintext, bool nul_free,
                      std::vector<std::uint8_t>& encoded) {
  for (;;) {
    const std::uint8_t key = rng.nonzero_byte();
    if (nul_free && std::find(plaintext.begin(), plaintext.end(), key) != plaintext.end()) continue;
    encoded.resize(plaintext.size());
    std::transform(plaintext.begin(), plaintext.end(), encoded.begin(),
                   [key](std::uint8_t b) { return static_cast<std::uint8_t>(b ^ key); });
    return key;
  }
}

namespace {

bool bytes_nonzero(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    if (((v >> (8 * i)) & 0xFF) == 0) return false;
  }
  return true;
}

}  // namespace

void emit_load_count(Assembler& a, Rng& rng, Reg reg, std::uint32_t value, bool nul_free) {
  const bool low_byte = x86::r(reg) <= 3;
  std::vector<int> forms;
  if (value >= 1 && value <= 127) forms.push_back(0);  // push imm8; pop
  if (low_byte && value >= 1 && value <= 255) forms.push_back(1);  // xor; mov r8
  forms.push_back(2);  // masked mov/xor
  if (!nul_free) {
    forms.push_back(3);  // mov imm32
    forms.push_back(4);  // push imm32; pop
  }
  switch (forms[rng.below(forms.size())]) {
    case 0:
      x86::push_imm8(a, static_cast<std::int8_t>(value));
      x86::pop(a, reg);
      break;
    case 1:
      x86::xor_rr(a, reg, reg);
      x86::mov_r8_imm8(a, reg, static_cast<std::uint8_t>(value));
      break;
    case 2: {
      std::uint32_t mask = 0;
      do {
        mask = static_cast<std::uint32_t>(rng.engine()());
      } while (!bytes_nonzero(mask) || !bytes_nonzero(mask ^ value));
      x86::mov_imm32(a, reg, value ^ mask);
      x86::alu_imm32(a, x86::AluOp::xor_, reg, mask);
      break;
    }
    case 3:
      x86::mov_imm32(a, reg, value);
      break;
    default:
      x86::push_imm32(a, value);
      x86::pop(a, reg);
      break;
  }
}

void emit_decrypt_loop(Assembler& a, Rng& rng, const DecryptLoop& loop) {
  if (loop.key_reg) {
    x86::mov_r8_imm8(a, *loop.key_reg, loop.key);
    emit_junk(a, rng, loop.junk_density);
  }
  const auto top = a.label();
  a.bind(top);
  if (loop.key_reg) {
    x86::xor_byte_ptr_r8(a, loop.pointer, *loop.key_reg);
  } else {
    x86::xor_byte_ptr_imm8(a, loop.pointer, loop.key);
  }
  emit_junk(a, rng, loop.junk_density);
  switch (rng.below(3)) {
    case 0:
      x86::inc(a, loop.pointer);
      break;
    case 1:
      x86::alu_imm8(a, x86::AluOp::add, loop.pointer, 1);
      break;
    default:
      x86::lea_disp8(a, loop.pointer, loop.pointer, 1);
      break;
  }
  emit_junk(a, rng, loop.junk_density);
  if (loop.style == LoopStyle::loop_ecx) {
    x86::loop8(a, top);
  } else {
    x86::dec(a, loop.counter);
    x86::jcc8(a, Condition::ne, top);
  }
}

std::uint64_t decrypt_loop_cost(std::size_t length) {
  // xor + inc + branch(es) + two junk gaps of up to two instructions per unit
  constexpr std::uint64_t per_byte = 4 + 2 * 2 * kMaxJunkUnitsPerGap;
  return per_byte * length + 64;
}

bool contains_nul(std::span<const std::uint8_t> bytes) {
  return std::find(bytes.begin(), bytes.end(), std::uint8_t{0}) != bytes.end();
}

}  // namespace nlemu::corpus_detail
