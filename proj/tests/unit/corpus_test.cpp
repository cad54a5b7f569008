#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "nlemu/corpus/background.hpp"
#include "nlemu/corpus/evasion.hpp"
#include "nlemu/corpus/getpc.hpp"
#include "nlemu/corpus/sample.hpp"
#include "nlemu/corpus/shellcode.hpp"
#include "nlemu/corpus/variants.hpp"
#include "nlemu/corpus/xor.hpp"
#include "nlemu/cpu/chain.hpp"
#include "nlemu/detector/getpc.hpp"
#include "nlemu/error.hpp"

namespace nlemu {
namespace {

using Bytes = std::vector<std::uint8_t>;
namespace fs = std::filesystem;

constexpr std::array<GetPCVariant, 4> kAllGetPC = {
    GetPCVariant::call_rel_pop, GetPCVariant::fstenv, GetPCVariant::call_indirect_push,
    GetPCVariant::none_register_assume};

TEST(Xor, ZeroBytesBecomeKey) {
  EXPECT_EQ(encode_payload_xor(Bytes{0, 0, 0}, 0xAA), (Bytes{0xAA, 0xAA, 0xAA}));
}

TEST(Xor, FfKeyComplements) {
  EXPECT_EQ(encode_payload_xor(Bytes{0xDE, 0xAD}, 0xFF), (Bytes{0x21, 0x52}));
}

TEST(Xor, Involution) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    Bytes p(1 + rng() % 300);
    for (auto& b : p) b = static_cast<std::uint8_t>(rng());
    const auto k = static_cast<std::uint8_t>(rng());
    ASSERT_EQ(encode_payload_xor(encode_payload_xor(p, k), k), p);
  }
}

TEST(Xor, Errors) {
  EXPECT_THROW(encode_payload_xor(Bytes{}, 1), ParamError);
  EXPECT_THROW(encode_payload_xor(Bytes{0x10, 0x20}, 0x20, true), KeyError);
  EXPECT_NO_THROW(encode_payload_xor(Bytes{0x10, 0x20}, 0x30, true));
}

TEST(Xor, InertPayloadShape) {
  const Bytes p = inert_payload(40);
  ASSERT_EQ(p.size(), 40u);
  EXPECT_EQ(p[0], kInertPayloadLead);
  EXPECT_EQ(inert_payload(40), p);
  EXPECT_EQ(Bytes(p.begin() + 1, p.begin() + 17),
            Bytes(std::string_view("NLE-INERT-MARKER").begin(),
                  std::string_view("NLE-INERT-MARKER").end()));
}

TEST(EmitGetPC, CallRelPopEsi) {
  const GetPCBlock b = emit_getpc(GetPCVariant::call_rel_pop, Reg::esi);
  EXPECT_EQ(b.bytes, (Bytes{0xE8, 0x00, 0x00, 0x00, 0x00, 0x5E}));
}

TEST(EmitGetPC, IndirectCallEsiMatchesPushedStub) {
  const GetPCBlock b = emit_getpc(GetPCVariant::call_indirect_push, Reg::esi);
  EXPECT_EQ(b.bytes, (Bytes{0x68, 0x5E, 0x56, 0x90, 0xC3, 0xFF, 0xD4}));
  EXPECT_EQ(b.reference_offset, b.bytes.size());
}

TEST(EmitGetPC, NoneEmitsNothing) {
  EXPECT_TRUE(emit_getpc(GetPCVariant::none_register_assume, Reg::eax).bytes.empty());
}

TEST(EmitGetPC, EspIsRejected) {
  for (GetPCVariant v : kAllGetPC) {
    EXPECT_THROW(emit_getpc(v, Reg::esp), UnsupportedRegister);
  }
}

// Runs a GetPC block followed by a halt and returns the target register.
std::uint32_t run_block(const GetPCBlock& block, Reg target, std::uint32_t& base) {
  Bytes code = block.bytes;
  code.push_back(0xF4);
  ChainRun run = emulate_chain(code, 0, ChainConfig{});
  base = run.trace.buffer.base;
  EXPECT_EQ(run.trace.termination, TerminationReason::unmodeled_instruction);
  return run.state.reg(target);
}

TEST(EmitGetPC, RegisterHoldsReferenceAddressForEveryTarget) {
  for (GetPCVariant v : {GetPCVariant::call_rel_pop, GetPCVariant::fstenv,
                         GetPCVariant::call_indirect_push}) {
    for (bool nul_free : {false, true}) {
      for (std::size_t r = 0; r < 8; ++r) {
        const Reg target = static_cast<Reg>(r);
        if (target == Reg::esp) continue;
        const GetPCBlock block = emit_getpc(v, target, nul_free);
        std::uint32_t base = 0;
        const std::uint32_t value = run_block(block, target, base);
        EXPECT_EQ(value, base + block.reference_offset)
            << getpc_variant_name(v) << " " << reg_name(target) << " nul_free=" << nul_free;
        if (nul_free) {
          EXPECT_EQ(std::count(block.bytes.begin(), block.bytes.end(), 0), 0);
        }
      }
    }
  }
}

TEST(EmitGetPC, FstenvRecoversFpuOpAddress) {
  const GetPCBlock b = emit_getpc(GetPCVariant::fstenv, Reg::ebx);
  EXPECT_EQ(b.reference_offset, 0u);
  std::uint32_t base = 0;
  EXPECT_EQ(run_block(b, Reg::ebx, base), base);
}

TEST(Shellcode, PolymorphicButSamePlaintext) {
  GeneratorSpec spec;
  spec.payload_length = 64;
  const CorpusSample a = generate_shellcode(spec, 1);
  const CorpusSample b = generate_shellcode(spec, 2);
  EXPECT_NE(a.bytes, b.bytes);
  const auto pa = recover_plaintext(a);
  const auto pb = recover_plaintext(b);
  ASSERT_TRUE(pa && pb);
  EXPECT_EQ(*pa, *pb);
  EXPECT_EQ(*pa, a.plaintext_payload);
}

TEST(Shellcode, NoTwoOfHundredIdentical) {
  for (GetPCVariant v : kAllGetPC) {
    GeneratorSpec spec;
    spec.getpc_variant = v;
    std::set<Bytes> seen;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      seen.insert(generate_shellcode(spec, seed).bytes);
    }
    EXPECT_EQ(seen.size(), 100u) << getpc_variant_name(v);
  }
}

TEST(Shellcode, ExpectedVerdicts) {
  GeneratorSpec spec;
  spec.getpc_variant = GetPCVariant::none_register_assume;
  EXPECT_EQ(generate_shellcode(spec, 0).expected_baseline_verdict, Label::benign);
  spec.getpc_variant = GetPCVariant::call_rel_pop;
  EXPECT_EQ(generate_shellcode(spec, 0).expected_baseline_verdict, Label::shellcode);
  spec.getpc_variant = GetPCVariant::fstenv;
  EXPECT_EQ(generate_shellcode(spec, 0).expected_baseline_verdict, Label::shellcode);
  spec.getpc_variant = GetPCVariant::call_indirect_push;
  const CorpusSample ci = generate_shellcode(spec, 0);
  EXPECT_EQ(ci.expected_baseline_verdict, Label::benign);
  EXPECT_EQ(ci.expected_extended_verdict, Label::shellcode);
}

TEST(Shellcode, JunkDensityExtremesDecrypt) {
  for (double density : {0.0, 0.5, 1.0}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      GeneratorSpec spec;
      spec.junk_density = density;
      const CorpusSample s = generate_shellcode(spec, seed);
      ASSERT_EQ(recover_plaintext(s), s.plaintext_payload) << density << " " << seed;
    }
  }
  GeneratorSpec dense;
  dense.junk_density = 1.0;
  EXPECT_GT(generate_shellcode(dense, 3).payload_offset,
            generate_shellcode(GeneratorSpec{}, 3).payload_offset);
}

TEST(Shellcode, RoundTripAllVariantsAndLengths) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 200; ++i) {
    GeneratorSpec spec;
    spec.getpc_variant = kAllGetPC[rng() % 4];
    spec.payload_length = 1 + rng() % 300;
    spec.junk_density = static_cast<double>(rng() % 101) / 100.0;
    spec.register_permutation_seed = rng();
    spec.nul_free = rng() % 2 == 0;
    const CorpusSample s = generate_shellcode(spec, rng());
    ASSERT_EQ(recover_plaintext(s), s.plaintext_payload) << "iteration " << i;
  }
}

TEST(Shellcode, NulFreeHasNoZeroBytes) {
  for (GetPCVariant v : kAllGetPC) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      GeneratorSpec spec;
      spec.getpc_variant = v;
      spec.nul_free = true;
      spec.payload_length = 16 + seed * 7;
      const CorpusSample s = generate_shellcode(spec, seed);
      ASSERT_EQ(std::count(s.bytes.begin(), s.bytes.end(), 0), 0)
          << getpc_variant_name(v) << " seed " << seed;
      ASSERT_EQ(recover_plaintext(s), s.plaintext_payload);
    }
  }
}

TEST(Shellcode, SpecErrors) {
  GeneratorSpec spec;
  spec.payload_length = 0;
  EXPECT_THROW(generate_shellcode(spec, 0), SpecError);
  spec = GeneratorSpec{};
  spec.junk_density = 1.5;
  EXPECT_THROW(generate_shellcode(spec, 0), SpecError);
}

TEST(Shellcode, DecoderTotalityAlongEntryPath) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    GeneratorSpec spec;
    spec.getpc_variant = kAllGetPC[seed % 4];
    spec.junk_density = static_cast<double>(seed % 5) / 4.0;
    spec.payload_length = 8 + seed % 57;
    const CorpusSample s = generate_shellcode(spec, seed);
    ChainRun run = emulate_chain(s.bytes, s.entry_offset, replay_config(s));
    // The only stop is the inert lead byte of the decrypted payload.
    ASSERT_EQ(run.trace.termination, TerminationReason::unmodeled_instruction)
        << "seed " << seed << " stopped with " << termination_name(run.trace.termination);
    ASSERT_EQ(run.trace.final_eip, run.trace.buffer.base + s.payload_offset) << "seed " << seed;
  }
}

TEST(Evasion, StackScanReadsTibBeforeAnyBufferRead) {
  const CorpusSample s = emit_evasion(EvasionKind::stack_scan_fs, EvasionParams{}, 1);
  ASSERT_TRUE(s.requires_stack_resident);
  const ChainRun run = emulate_chain(s.bytes, s.entry_offset, replay_config(s));
  const ExecutionTrace& t = run.trace;
  std::size_t top = t.access_log.size();
  std::size_t limit = t.access_log.size();
  std::size_t first_payload_read = t.access_log.size();
  for (std::size_t i = 0; i < t.access_log.size(); ++i) {
    const AccessEvent& e = t.access_log[i];
    if (e.kind != AccessKind::read) continue;
    if (e.addr == t.fs_base + 4 && top == t.access_log.size()) top = i;
    if (e.addr == t.fs_base + 8 && limit == t.access_log.size()) limit = i;
    const std::uint32_t payload = t.buffer.base + s.payload_offset;
    if (e.addr >= payload && e.addr < payload + s.plaintext_payload.size() &&
        first_payload_read == t.access_log.size()) {
      first_payload_read = i;
    }
  }
  ASSERT_LT(top, t.access_log.size());
  ASSERT_LT(limit, t.access_log.size());
  EXPECT_LT(std::max(top, limit), first_payload_read);
  EXPECT_TRUE(detect_getpc_events(t, GetPCModes::baseline()).empty());
  EXPECT_EQ(recover_plaintext(s), s.plaintext_payload);
}

TEST(Evasion, SyscallCopyFirstServiceIsAllocate) {
  const CorpusSample s = emit_evasion(EvasionKind::syscall_copy, EvasionParams{}, 1);
  ChainConfig plain;
  const ChainRun run = emulate_chain(s.bytes, s.entry_offset, plain);
  EXPECT_EQ(run.trace.termination, TerminationReason::syscall_unmodeled);
  EXPECT_EQ(run.state.reg(Reg::eax), 0x11u);
  const Bytes sysenter = {0x0F, 0x34};
  const auto eip = run.trace.final_eip - run.trace.buffer.base;
  ASSERT_LT(eip + 1, s.bytes.size());
  EXPECT_EQ(Bytes(s.bytes.begin() + eip, s.bytes.begin() + eip + 2), sysenter);
  EXPECT_TRUE(s.requires_syscall_model);
  EXPECT_EQ(s.plaintext_location, PlaintextLocation::scratch);
  EXPECT_EQ(recover_plaintext(s), s.plaintext_payload);
}

TEST(Evasion, TimeExhaustOutlastsBudgetBeforeGetPC) {
  EvasionParams p;
  p.loop_count = 1'000'000;
  const CorpusSample s = emit_evasion(EvasionKind::time_exhaust, p, 1);
  const ChainConfig config;
  const ExecutionTrace t = run_chain(DataBuffer{s.bytes, kDefaultBufferBase, {}}, 0, config);
  EXPECT_EQ(t.termination, TerminationReason::budget_exhausted);
  EXPECT_EQ(t.retired, config.instruction_budget);
  EXPECT_TRUE(t.markers.empty());
  EXPECT_EQ(recover_plaintext(s), s.plaintext_payload);
}

TEST(Evasion, PiqAndFpuDoNotDecryptUnderWriteThroughEmulation) {
  for (EvasionKind k : {EvasionKind::piq_selfmod, EvasionKind::fpu_dependent}) {
    const CorpusSample s = emit_evasion(k, EvasionParams{}, 5);
    EXPECT_EQ(s.plaintext_location, PlaintextLocation::none);
    EXPECT_FALSE(recover_plaintext(s));
    const ExecutionTrace t =
        run_chain(DataBuffer{s.bytes, kDefaultBufferBase, {}}, s.entry_offset, ChainConfig{});
    EXPECT_EQ(t.termination, TerminationReason::unmodeled_instruction) << s.variant;
    EXPECT_LT(t.buffer_read_addresses().size(), 8u) << s.variant;
  }
}

TEST(Evasion, AllBaselineBenign) {
  for (EvasionKind k : {EvasionKind::stack_scan_fs, EvasionKind::syscall_copy,
                        EvasionKind::time_exhaust, EvasionKind::piq_selfmod,
                        EvasionKind::fpu_dependent}) {
    const CorpusSample s = emit_evasion(k, EvasionParams{}, 9);
    EXPECT_EQ(s.expected_baseline_verdict, Label::benign) << s.variant;
    EXPECT_FALSE(s.caught_by.empty());
  }
}

TEST(Evasion, ParamErrors) {
  EvasionParams p;
  p.payload_length = 0;
  EXPECT_THROW(emit_evasion(EvasionKind::time_exhaust, p, 0), ParamError);
  p = EvasionParams{};
  p.loop_count = 0;
  EXPECT_THROW(emit_evasion(EvasionKind::time_exhaust, p, 0), ParamError);
}

TEST(Evasion, NonDefaultSyscallNumbersReplay) {
  EvasionParams p;
  p.allocate_syscall = 0x15;
  p.copy_syscall = 0xC2;
  const CorpusSample s = emit_evasion(EvasionKind::syscall_copy, p, 2);
  EXPECT_EQ(recover_plaintext(s), s.plaintext_payload);
}

TEST(Background, Deterministic) {
  for (auto kind : {BackgroundKind::uniform_random, BackgroundKind::ascii_text,
                    BackgroundKind::http_like}) {
    EXPECT_EQ(generate_background(kind, 16, 0), generate_background(kind, 16, 0));
    EXPECT_NE(generate_background(kind, 256, 0), generate_background(kind, 256, 1));
    EXPECT_EQ(generate_background(kind, 777, 3).size(), 777u);
  }
}

TEST(Background, AsciiTextIsSevenBit) {
  const Bytes b = generate_background(BackgroundKind::ascii_text, 8192, 5);
  for (std::uint8_t c : b) ASSERT_LT(c, 0x80);
}

TEST(Background, HttpLikeStartsWithMethod) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Bytes b = generate_background(BackgroundKind::http_like, 1024, seed);
    const std::string text(b.begin(), b.end());
    const auto space = text.find(' ');
    ASSERT_NE(space, std::string::npos);
    const std::string method = text.substr(0, space);
    EXPECT_TRUE(method == "GET" || method == "POST" || method == "PUT" || method == "HEAD" ||
                method == "DELETE" || method == "OPTIONS")
        << method;
    EXPECT_NE(text.find("\r\n"), std::string::npos);
  }
}

TEST(Background, ZeroLengthRejected) {
  EXPECT_THROW(generate_background(BackgroundKind::ascii_text, 0, 0), ParamError);
}

class SidecarTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nlemu_sidecar_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(SidecarTest, RoundTripEveryVariant) {
  for (std::string_view name : kVariantNames) {
    VariantOptions o;
    o.carrier_length = name == "xor_call_rel" ? 300 : 0;
    const CorpusSample s = generate_variant(name, 12, o);
    write_sample(dir_, std::string(name), s);
    EXPECT_EQ(read_sample(dir_ / (std::string(name) + ".json")), s) << name;
  }
}

TEST_F(SidecarTest, TamperedBytesAreRejected) {
  const CorpusSample s = generate_variant("xor_fstenv", 1);
  write_sample(dir_, "x", s);
  {
    std::ofstream bin(dir_ / "x.bin", std::ios::binary | std::ios::app);
    bin.put('\x90');
  }
  EXPECT_THROW(read_sample(dir_ / "x.json"), FormatError);
}

TEST_F(SidecarTest, MalformedJsonIsRejected) {
  write_sample(dir_, "x", generate_variant("xor_fstenv", 1));
  {
    std::ofstream side(dir_ / "x.json", std::ios::trunc);
    side << "{ not json";
  }
  EXPECT_THROW(read_sample(dir_ / "x.json"), FormatError);
  auto j = sample_to_sidecar(generate_variant("xor_fstenv", 1));
  j.erase("key");
  EXPECT_THROW(sample_from_sidecar(j, generate_variant("xor_fstenv", 1).bytes), FormatError);
}

TEST_F(SidecarTest, MissingBinIsIoError) {
  write_sample(dir_, "x", generate_variant("xor_fstenv", 1));
  fs::remove(dir_ / "x.bin");
  EXPECT_THROW(read_sample(dir_ / "x.json"), IoError);
}

TEST(Variants, NamesAndErrors) {
  EXPECT_TRUE(is_variant("evasion_piq_selfmod"));
  EXPECT_FALSE(is_variant("xor"));
  EXPECT_TRUE(is_decryptor_variant("xor_register_assume"));
  EXPECT_FALSE(is_decryptor_variant("evasion_time_exhaust"));
  EXPECT_THROW(generate_variant("nope", 0), SpecError);
  VariantOptions o;
  o.nul_free = true;
  EXPECT_THROW(generate_variant("evasion_time_exhaust", 0, o), SpecError);
  EXPECT_NO_THROW(generate_variant("xor_call_rel", 0, o));
}

TEST(Variants, CarrierShiftsOffsetsAndStillDecrypts) {
  VariantOptions o;
  o.carrier_length = 1000;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CorpusSample s = generate_variant("xor_call_indirect", seed, o);
    EXPECT_EQ(s.bytes.size(), 1000 + generate_variant("xor_call_indirect", seed).bytes.size());
    EXPECT_EQ(recover_plaintext(s), s.plaintext_payload);
  }
}

TEST(Variants, DeterministicInSeed) {
  for (std::string_view name : kVariantNames) {
    EXPECT_EQ(generate_variant(name, 4), generate_variant(name, 4)) << name;
  }
}

}  // namespace
}  // namespace nlemu
