#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "assembler.hpp"

namespace nlemu::corpus_detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t salt);

  // Uniform in [0, n).
  std::size_t below(std::size_t n);
  bool chance(double p);
  std::uint8_t nonzero_byte();
  template <typename T>
  T pick(std::span<const T> options) {
    return options[below(options.size())];
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Registers usable as a decryption pointer with a plain [reg] operand.
inline constexpr Reg kPointerRegs[] = {Reg::eax, Reg::ebx, Reg::edx, Reg::esi, Reg::edi};
inline constexpr Reg kGeneralRegs[] = {Reg::eax, Reg::ecx, Reg::edx, Reg::ebx,
                                       Reg::ebp, Reg::esi, Reg::edi};

inline constexpr std::size_t kMaxJunkUnitsPerGap = 4;
inline constexpr std::size_t kMaxPayloadLength = 1u << 16;

// Zero to four register- and memory-preserving units; each further unit is
// emitted with probability `density`.
void emit_junk(Assembler& a, Rng& rng, double density);

// Draws a nonzero key; under nul_free, redraws until the encoding has no NUL.
std::uint8_t pick_key(Rng& rng, std::span<const std::uint8_t> plaintext, bool nul_free,
                      std::vector<std::uint8_t>& encoded);

// Loads `value` into `reg` in one of several encodings.
void emit_load_count(Assembler& a, Rng& rng, Reg reg, std::uint32_t value, bool nul_free);

enum class LoopStyle : std::uint8_t { loop_ecx, dec_jnz };

struct DecryptLoop {
  Reg pointer = Reg::esi;
  Reg counter = Reg::ecx;
  LoopStyle style = LoopStyle::loop_ecx;
  std::uint8_t key = 0;
  std::optional<Reg> key_reg;  // XOR through a byte register instead of an immediate
  double junk_density = 0.0;
};

// Emits the key-register load (if any) and the loop body. The pointer and
// counter must already be set up.
void emit_decrypt_loop(Assembler& a, Rng& rng, const DecryptLoop& loop);

// Upper bound on instructions the loop retires for `length` payload bytes.
std::uint64_t decrypt_loop_cost(std::size_t length);

bool contains_nul(std::span<const std::uint8_t> bytes);

}  // namespace nlemu::corpus_detail
