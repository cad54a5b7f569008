#include "nlemu/corpus/sample.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>

#include "nlemu/corpus/xor.hpp"
#include "nlemu/error.hpp"

namespace nlemu {

using nlohmann::json;

std::string_view plaintext_location_name(PlaintextLocation l) {
  switch (l) {
    case PlaintextLocation::buffer: return "buffer";
    case PlaintextLocation::scratch: return "scratch";
    case PlaintextLocation::none: return "none";
  }
  return "?";
}

std::optional<PlaintextLocation> parse_plaintext_location(std::string_view name) {
  for (auto l : {PlaintextLocation::buffer, PlaintextLocation::scratch, PlaintextLocation::none}) {
    if (plaintext_location_name(l) == name) return l;
  }
  return std::nullopt;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

json sample_to_sidecar(const CorpusSample& s) {
  json j;
  j["schema"] = kSidecarSchema;
  j["variant"] = s.variant;
  j["seed"] = s.seed;
  j["length"] = s.bytes.size();
  j["bytes_sha256"] = sha256_hex(s.bytes);
  j["entry_offset"] = s.entry_offset;
  j["key"] = s.key;
  j["payload_length"] = s.plaintext_payload.size();
  j["payload_sha256"] = sha256_hex(s.plaintext_payload);
  j["payload_offset"] = s.payload_offset;
  j["plaintext_location"] = plaintext_location_name(s.plaintext_location);
  j["plaintext_offset"] = s.plaintext_offset;
  j["expected_baseline_verdict"] = label_name(s.expected_baseline_verdict);
  j["expected_extended_verdict"] = label_name(s.expected_extended_verdict);
  j["getpc_variant"] = s.getpc_variant ? json(getpc_variant_name(*s.getpc_variant)) : json(nullptr);
  j["assumed_register"] = s.assumed_register ? json(reg_name(*s.assumed_register)) : json(nullptr);
  j["junk_density"] = s.junk_density;
  j["nul_free"] = s.nul_free;
  j["requires_syscall_model"] = s.requires_syscall_model;
  j["requires_stack_resident"] = s.requires_stack_resident;
  j["replay_budget"] = s.replay_budget;
  j["params"] = s.params;
  j["caught_by"] = s.caught_by;
  return j;
}

namespace {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw FormatError(std::string("sidecar is missing '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("sidecar field '") + name + "' has the wrong type");
  }
}

template <typename T, typename Parse>
T parsed(const json& j, const char* name, Parse parse) {
  const auto text = field<std::string>(j, name);
  const auto v = parse(text);
  if (!v) throw FormatError(std::string("sidecar field '") + name + "' is invalid: " + text);
  return *v;
}

}  // namespace

CorpusSample sample_from_sidecar(const json& j, std::vector<std::uint8_t> bytes) {
  if (!j.is_object()) throw FormatError("sidecar is not an object");
  if (field<int>(j, "schema") != kSidecarSchema) throw FormatError("unsupported sidecar schema");
  CorpusSample s;
  s.bytes = std::move(bytes);
  if (field<std::size_t>(j, "length") != s.bytes.size() ||
      field<std::string>(j, "bytes_sha256") != sha256_hex(s.bytes)) {
    throw FormatError("sample bytes do not match the sidecar");
  }
  s.variant = field<std::string>(j, "variant");
  s.seed = field<std::uint64_t>(j, "seed");
  s.entry_offset = field<std::uint32_t>(j, "entry_offset");
  if (s.entry_offset >= s.bytes.size()) throw FormatError("entry_offset outside the sample");
  s.key = field<std::uint8_t>(j, "key");
  s.plaintext_payload = inert_payload(field<std::size_t>(j, "payload_length"));
  if (field<std::string>(j, "payload_sha256") != sha256_hex(s.plaintext_payload)) {
    throw FormatError("payload digest does not match");
  }
  s.payload_offset = field<std::uint32_t>(j, "payload_offset");
  s.plaintext_location = parsed<PlaintextLocation>(j, "plaintext_location", parse_plaintext_location);
  s.plaintext_offset = field<std::uint32_t>(j, "plaintext_offset");
  s.expected_baseline_verdict = parsed<Label>(j, "expected_baseline_verdict", parse_label);
  s.expected_extended_verdict = parsed<Label>(j, "expected_extended_verdict", parse_label);
  if (!j.contains("getpc_variant") || !j.contains("assumed_register")) {
    throw FormatError("sidecar is missing optional-valued fields");
  }
  if (!j["getpc_variant"].is_null()) {
    s.getpc_variant = parsed<GetPCVariant>(j, "getpc_variant", parse_getpc_variant);
  }
  if (!j["assumed_register"].is_null()) {
    s.assumed_register = parsed<Reg>(j, "assumed_register", parse_reg);
  }
  s.junk_density = field<double>(j, "junk_density");
  s.nul_free = field<bool>(j, "nul_free");
  s.requires_syscall_model = field<bool>(j, "requires_syscall_model");
  s.requires_stack_resident = field<bool>(j, "requires_stack_resident");
  s.replay_budget = field<std::uint64_t>(j, "replay_budget");
  s.params = field<json>(j, "params");
  s.caught_by = field<std::string>(j, "caught_by");
  return s;
}

void write_sample(const std::filesystem::path& dir, const std::string& stem,
                  const CorpusSample& sample) {
  const auto bin = dir / (stem + ".bin");
  const auto side = dir / (stem + ".json");
  {
    std::ofstream out(bin, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(sample.bytes.data()),
              static_cast<std::streamsize>(sample.bytes.size()));
    if (!out) throw IoError("cannot write " + bin.string());
  }
  std::ofstream out(side, std::ios::trunc);
  out << sample_to_sidecar(sample).dump(2) << '\n';
  if (!out) throw IoError("cannot write " + side.string());
}

CorpusSample read_sample(const std::filesystem::path& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) throw IoError("cannot open " + sidecar_path.string());
  json j = json::parse(side, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw FormatError("malformed sidecar " + sidecar_path.string());

  auto bin_path = sidecar_path;
  bin_path.replace_extension(".bin");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + bin_path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(bin),
                                  std::istreambuf_iterator<char>()};
  return sample_from_sidecar(j, std::move(bytes));
}

CorpusSample place_in_carrier(const CorpusSample& sample, std::span<const std::uint8_t> carrier,
                              std::size_t offset) {
  offset = std::min(offset, carrier.size());
  CorpusSample out = sample;
  out.bytes.clear();
  out.bytes.reserve(carrier.size() + sample.bytes.size());
  out.bytes.insert(out.bytes.end(), carrier.begin(), carrier.begin() + static_cast<std::ptrdiff_t>(offset));
  out.bytes.insert(out.bytes.end(), sample.bytes.begin(), sample.bytes.end());
  out.bytes.insert(out.bytes.end(), carrier.begin() + static_cast<std::ptrdiff_t>(offset), carrier.end());
  const auto shift = static_cast<std::uint32_t>(offset);
  out.entry_offset += shift;
  out.payload_offset += shift;
  if (out.plaintext_location == PlaintextLocation::buffer) out.plaintext_offset += shift;
  out.params["carrier"] = {{"length", carrier.size()}, {"offset", offset}};
  return out;
}

ChainConfig replay_config(const CorpusSample& sample) {
  ChainConfig config;
  config.layout.stack_resident_buffer = sample.requires_stack_resident;
  config.step.syscalls.enabled = sample.requires_syscall_model;
  if (sample.params.contains("allocate_syscall")) {
    config.step.syscalls.allocate_number = sample.params["allocate_syscall"].get<std::uint32_t>();
  }
  if (sample.params.contains("copy_syscall")) {
    config.step.syscalls.copy_number = sample.params["copy_syscall"].get<std::uint32_t>();
  }
  config.step.scratch_base = config.layout.scratch_base;
  config.instruction_budget = std::max(config.instruction_budget, sample.replay_budget);
  if (sample.assumed_register) {
    std::array<std::uint32_t, 8> values{};
    values[static_cast<std::size_t>(*sample.assumed_register)] =
        config.layout.effective_buffer_base() + sample.entry_offset;
    config.registers = RegisterPolicy::fixed(values);
  }
  return config;
}

std::optional<std::vector<std::uint8_t>> recover_plaintext(const CorpusSample& sample) {
  if (sample.plaintext_location == PlaintextLocation::none) return std::nullopt;
  const ChainConfig config = replay_config(sample);
  ChainRun run = emulate_chain(sample.bytes, sample.entry_offset, config);
  const RegionKind kind = sample.plaintext_location == PlaintextLocation::buffer
                              ? RegionKind::buffer
                              : RegionKind::scratch;
  const RegionSpec* region = run.memory.region_of_kind(kind);
  if (region == nullptr) return std::nullopt;
  std::vector<std::uint8_t> out(sample.plaintext_payload.size());
  if (!run.memory.read(region->base + sample.plaintext_offset, out)) return std::nullopt;
  return out;
}

}  // namespace nlemu
