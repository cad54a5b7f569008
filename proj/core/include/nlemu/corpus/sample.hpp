#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlemu/corpus/getpc.hpp"
#include "nlemu/cpu/chain.hpp"
#include "nlemu/detector/classify.hpp"

namespace nlemu {

enum class PlaintextLocation : std::uint8_t { buffer, scratch, none };

std::string_view plaintext_location_name(PlaintextLocation l);
std::optional<PlaintextLocation> parse_plaintext_location(std::string_view name);

inline constexpr int kSidecarSchema = 1;

// A generated buffer with its ground truth.
struct CorpusSample {
  std::vector<std::uint8_t> bytes;
  std::string variant;
  std::uint64_t seed = 0;
  std::uint32_t entry_offset = 0;
  std::uint8_t key = 0;
  std::vector<std::uint8_t> plaintext_payload;
  Label expected_baseline_verdict = Label::benign;
  Label expected_extended_verdict = Label::benign;

  std::uint32_t payload_offset = 0;  // start of the encoded payload in `bytes`
  // Where emulated decryption leaves the plaintext: an offset into the
  // buffer, or into the first scratch region a modeled syscall allocates.
  PlaintextLocation plaintext_location = PlaintextLocation::buffer;
  std::uint32_t plaintext_offset = 0;
  std::optional<GetPCVariant> getpc_variant;
  std::optional<Reg> assumed_register;  // holds buffer base + entry_offset
  double junk_density = 0.0;
  bool nul_free = false;
  bool requires_syscall_model = false;
  bool requires_stack_resident = false;
  std::uint64_t replay_budget = 0;  // instructions a full decryption may take
  nlohmann::json params = nlohmann::json::object();
  std::string caught_by;

  friend bool operator==(const CorpusSample&, const CorpusSample&) = default;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);

nlohmann::json sample_to_sidecar(const CorpusSample& sample);
// Rebuilds a sample from its sidecar and raw bytes. Throws FormatError on a
// missing or ill-typed field, or when a recorded digest does not match.
CorpusSample sample_from_sidecar(const nlohmann::json& sidecar, std::vector<std::uint8_t> bytes);

// Writes <dir>/<stem>.bin and <dir>/<stem>.json. Throws IoError.
void write_sample(const std::filesystem::path& dir, const std::string& stem,
                  const CorpusSample& sample);
// Reads a sidecar and the .bin beside it. Throws IoError or FormatError.
CorpusSample read_sample(const std::filesystem::path& sidecar_path);

// Inserts the sample into `carrier` at byte `offset` (clamped to the carrier
// size), shifting all recorded offsets.
CorpusSample place_in_carrier(const CorpusSample& sample, std::span<const std::uint8_t> carrier,
                              std::size_t offset);

// The chain configuration under which the sample decrypts when emulated from
// its entry offset.
ChainConfig replay_config(const CorpusSample& sample);

// Emulates the sample from its entry offset and returns the bytes at its
// plaintext location, or nullopt when the location is `none` or unmapped.
std::optional<std::vector<std::uint8_t>> recover_plaintext(const CorpusSample& sample);

}  // namespace nlemu
