// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlemu/cli/commands.hpp"
#include "nlemu/corpus/background.hpp"
#include "nlemu/corpus/evasion.hpp"
#include "nlemu/corpus/sample.hpp"
#include "nlemu/corpus/shellcode.hpp"
#include "nlemu/corpus/variants.hpp"
#include "nlemu/cpu/chain.hpp"
#include "nlemu/cpu/state.hpp"
#include "nlemu/cpu/step.hpp"
#include "nlemu/detector/classify.hpp"
#include "nlemu/detector/scan.hpp"
#include "nlemu/ingest/chunk.hpp"

namespace {

using namespace nlemu;
using Clock = std::chrono::steady_clock;
using Bytes = std::vector<std::uint8_t>;
namespace fs = std::filesystem;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

DataBuffer buffer_of(const Bytes& bytes) {
  DataBuffer b;
  b.bytes = bytes;
  return b;
}

bool convicts(const Bytes& bytes, const ScanConfig& config) {
  return scan_buffer(buffer_of(bytes), config).verdict.is_shellcode();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1. Detection completeness under the baseline profile.
Outcome detection_completeness() {
  const auto start = Clock::now();
  int detected = 0;
  int total = 0;
  for (GetPCVariant v : {GetPCVariant::call_rel_pop, GetPCVariant::fstenv}) {
    for (std::size_t len : {16u, 64u, 256u}) {
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        GeneratorSpec spec;
        spec.getpc_variant = v;
        spec.payload_length = len;
        spec.junk_density = 0.25;
        spec.register_permutation_seed = seed;
        const CorpusSample s = generate_shellcode(spec, seed);
        ++total;
        if (convicts(s.bytes, ScanConfig::baseline())) ++detected;
      }
    }
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << detected << "/" << total << " detected in " << secs << " s (limit 60 s)";
  return {detected == 600 && total == 600 && secs < 60.0, d.str()};
}

// 2. Zero false positives on 30 MiB of background data.
Outcome zero_false_positives() {
  const auto start = Clock::now();
  constexpr std::size_t kPerKind = 10u << 20;
  std::uint64_t chunks = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t skipped = 0;
  std::uint64_t kind_seed = 0;
  for (auto kind : {BackgroundKind::uniform_random, BackgroundKind::ascii_text,
                    BackgroundKind::http_like}) {
    const Bytes data = generate_background(kind, kPerKind, 1000 + kind_seed++);
    for (const DataBuffer& chunk : chunk_stream(data)) {
      const DetectionReport r = scan_buffer(chunk, ScanConfig::baseline());
      ++chunks;
      skipped += r.skipped_offsets;
      if (r.verdict.is_shellcode()) ++false_positives;
    }
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << false_positives << " shellcode verdicts over " << chunks << " chunks, " << skipped
    << " offsets skipped, " << secs << " s (limit 600 s)";
  return {false_positives == 0 && skipped == 0 && secs < 600.0, d.str()};
}

// 3. Evasions beat the baseline profile; two of them fall to the extended one.
Outcome evasion_reproduction() {
  const std::vector<std::string> evasions = {
      "xor_call_indirect",      "xor_register_assume",  "evasion_stack_scan_fs",
      "evasion_syscall_copy",   "evasion_time_exhaust", "evasion_fpu_dependent",
      "evasion_piq_selfmod"};
  constexpr std::uint64_t kSeeds = 5;
  int evaded = 0;
  for (const std::string& name : evasions) {
    bool all_benign = true;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
      if (convicts(generate_variant(name, seed).bytes, ScanConfig::baseline())) all_benign = false;
    }
    if (all_benign) ++evaded;
  }
  int flipped = 0;
  for (const char* name : {"xor_call_indirect", "evasion_stack_scan_fs"}) {
    bool all_convicted = true;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
      if (!convicts(generate_variant(name, seed).bytes, ScanConfig::extended())) {
        all_convicted = false;
      }
    }
    if (all_convicted) ++flipped;
  }
  bool syscall_copy_benign = true;
  for (Profile p : {Profile::baseline, Profile::extended}) {
    ScanConfig c = ScanConfig::for_profile(p);
    c.syscalls.enabled = true;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
      const CorpusSample s = generate_variant("evasion_syscall_copy", seed);
      if (convicts(s.bytes, c)) syscall_copy_benign = false;
      // The copy must actually happen under the model, or the claim is vacuous.
      if (recover_plaintext(s) != s.plaintext_payload) syscall_copy_benign = false;
    }
  }
  std::ostringstream d;
  d << evaded << "/7 evade baseline, " << flipped << "/2 caught by extended, syscall_copy "
    << (syscall_copy_benign ? "benign" : "CONVICTED") << " with the syscall model on";
  return {evaded == 7 && flipped == 2 && syscall_copy_benign, d.str()};
}

// 4. The pushed-stub indirect CALL leaves ESI at the address after CALL ESP.
Outcome pushed_stub_semantics() {
  const Bytes code = {0x68, 0x5E, 0x56, 0x90, 0xC3, 0xFF, 0xD4};
  auto [cpu, mem] = init_state(RegisterPolicy::zeroed(), MemoryLayoutConfig{}, code);
  const std::uint32_t expected = mem.buffer().base + static_cast<std::uint32_t>(code.size());
  bool clean = true;
  // push; call esp; pop esi; push esi; nop; ret
  for (int i = 0; i < 6; ++i) {
    if (step(cpu, mem).terminated) clean = false;
  }
  std::ostringstream d;
  d << std::hex << "ESI=0x" << cpu.reg(Reg::esi) << " expected 0x" << expected << ", EIP=0x"
    << cpu.eip;
  return {clean && cpu.reg(Reg::esi) == expected && cpu.eip == expected, d.str()};
}

// 5. Emulated decryption reproduces the plaintext for random generator specs.
Outcome round_trip() {
  std::mt19937_64 rng(0x5EED);
  constexpr std::array<GetPCVariant, 4> kVariants = {
      GetPCVariant::call_rel_pop, GetPCVariant::fstenv, GetPCVariant::call_indirect_push,
      GetPCVariant::none_register_assume};
  int ok = 0;
  for (int i = 0; i < 500; ++i) {
    GeneratorSpec spec;
    spec.getpc_variant = kVariants[rng() % kVariants.size()];
    spec.payload_length = 1 + rng() % 512;
    spec.junk_density = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    spec.register_permutation_seed = rng();
    spec.nul_free = rng() % 4 == 0;
    const CorpusSample s = generate_shellcode(spec, rng());
    if (recover_plaintext(s) == s.plaintext_payload) ++ok;
  }
  std::ostringstream d;
  d << ok << "/500 plaintexts reproduced byte for byte";
  return {ok == 500, d.str()};
}

// 6. The delay loop is stopped by the instruction budget, and a buffer scan
// overruns its wall budget by at most one chain.
Outcome budget_enforcement() {
  EvasionParams params;
  params.loop_count = 1'000'000;
  bool exact = true;
  bool timely = true;
  std::ostringstream d;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CorpusSample s = emit_evasion(EvasionKind::time_exhaust, params, seed);
    const DataBuffer b = buffer_of(s.bytes);
    for (std::uint64_t budget : {std::uint64_t{8192}, std::uint64_t{20000}}) {
      ScanConfig c;
      c.instruction_budget = budget;
      const ExecutionTrace t = run_chain(b, s.entry_offset, c.chain_config());
      if (t.termination != TerminationReason::budget_exhausted || t.retired != budget) {
        exact = false;
      }
    }
    // Worst single chain, timed the way the scanner spends it.
    ScanConfig c;
    double worst_ms = 0;
    for (std::size_t off = 0; off < b.size(); ++off) {
      const auto t0 = Clock::now();
      const ExecutionTrace t = run_chain(b, off, c.chain_config());
      (void)classify_trace(t, c);
      worst_ms = std::max(worst_ms, seconds_since(t0) * 1000.0);
    }
    for (std::int64_t wall_ms : {std::int64_t{2000}, std::int64_t{5}}) {
      c.wall_budget = std::chrono::milliseconds(wall_ms);
      const DetectionReport r = scan_buffer(b, c);
      const double elapsed_ms = std::chrono::duration<double, std::milli>(r.elapsed).count();
      if (elapsed_ms > static_cast<double>(wall_ms) + worst_ms) timely = false;
      if (seed == 0) {
        d << "wall " << wall_ms << " ms: scan " << elapsed_ms << " ms, worst chain " << worst_ms
          << " ms, skipped " << r.skipped_offsets << "; ";
      }
    }
  }
  d << (exact ? "retired == budget exactly" : "retired != budget");
  return {exact && timely, d.str()};
}

std::vector<CorpusSample> full_corpus() {
  std::vector<CorpusSample> out;
  constexpr std::array<std::size_t, 5> kLengths = {4, 12, 40, 64, 128};
  for (std::string_view name : kVariantNames) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      VariantOptions o;
      o.payload_length = kLengths[seed % kLengths.size()];
      o.carrier_length = seed % 3 == 0 ? 512 : 0;
      out.push_back(generate_variant(name, seed, o));
    }
  }
  return out;
}

// 7. Lower thresholds and more GetPC modes never shrink the conviction set.
Outcome monotonicity(const std::vector<CorpusSample>& corpus) {
  constexpr std::array<std::uint32_t, 5> kThresholds = {1, 4, 8, 16, 64};
  // convicted[profile][threshold][sample]
  std::vector<std::vector<std::vector<bool>>> convicted(
      2, std::vector<std::vector<bool>>(kThresholds.size(), std::vector<bool>(corpus.size())));
  for (int p = 0; p < 2; ++p) {
    for (std::size_t t = 0; t < kThresholds.size(); ++t) {
      ScanConfig c = ScanConfig::for_profile(p == 0 ? Profile::baseline : Profile::extended);
      c.payload_read_threshold = kThresholds[t];
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        convicted[p][t][i] = convicts(corpus[i].bytes, c);
      }
    }
  }
  bool nested = true;
  bool profile_subset = true;
  std::ostringstream d;
  for (int p = 0; p < 2; ++p) {
    d << (p == 0 ? "baseline" : "extended") << " sizes";
    for (std::size_t t = 0; t < kThresholds.size(); ++t) {
      d << " " << std::count(convicted[p][t].begin(), convicted[p][t].end(), true);
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (t > 0 && convicted[p][t][i] && !convicted[p][t - 1][i]) nested = false;
        if (p == 0 && convicted[0][t][i] && !convicted[1][t][i]) profile_subset = false;
      }
    }
    d << "; ";
  }
  d << corpus.size() << " samples, thresholds {1,4,8,16,64}";
  return {nested && profile_subset, d.str()};
}

// 8. Eval reports are byte-identical for one and eight workers.
Outcome determinism(const std::vector<CorpusSample>& corpus) {
  const fs::path dir = fs::temp_directory_path() / "nlemu_acceptance_corpus";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::ostringstream stem;
    stem << corpus[i].variant << "_" << i;
    write_sample(dir, stem.str(), corpus[i]);
  }
  std::string reports[2];
  int codes[2] = {0, 0};
  const unsigned jobs[2] = {1, 8};
  for (int k = 0; k < 2; ++k) {
    cli::EvalOptions o;
    o.dir = dir.string();
    o.tuning.jobs = jobs[k];
    o.tuning.json_path = "-";
    std::ostringstream out;
    std::ostringstream err;
    codes[k] = cli::cmd_eval(o, out, err);
    reports[k] = out.str();
  }
  fs::remove_all(dir);
  std::ostringstream d;
  d << "jobs 1: " << reports[0].size() << " bytes, exit " << codes[0] << "; jobs 8: "
    << reports[1].size() << " bytes, exit " << codes[1];
  return {!reports[0].empty() && reports[0] == reports[1] && codes[0] == codes[1] &&
              codes[0] == cli::kExitBenign,
          d.str()};
}

// 9. Samples straddling a chunk boundary inside the overlap are still found.
Outcome boundary_planting() {
  std::mt19937_64 rng(909);
  const ChunkOptions chunking;
  const std::size_t stride = chunking.max_len - chunking.overlap;
  int detected = 0;
  for (int trial = 0; trial < 20; ++trial) {
    VariantOptions o;
    o.payload_length = 16 + rng() % 240;
    const char* name = trial % 2 == 0 ? "xor_call_rel" : "xor_fstenv";
    const CorpusSample s = generate_variant(name, 300 + trial, o);
    Bytes carrier = generate_background(BackgroundKind::uniform_random, 2 * stride + 8192,
                                        7000 + trial);
    // Chunk k ends at k*stride + max_len; cross one of the first two ends.
    const std::size_t boundary = chunking.max_len + stride * (rng() % 2);
    const std::size_t before = 1 + rng() % (s.bytes.size() - 1);
    const std::size_t at = boundary - before;
    const CorpusSample placed = place_in_carrier(s, carrier, at);
    // A chain may start in carrier bytes that run into the sample, so the
    // hit may precede it; the carrier alone must then stay benign.
    bool found = false;
    for (const DataBuffer& chunk : chunk_stream(placed.bytes, chunking)) {
      const DetectionReport r = scan_buffer(chunk, ScanConfig::baseline());
      if (!r.verdict.is_shellcode()) continue;
      const std::uint64_t hit = chunk.origin.stream_offset + *r.verdict.offset;
      if (hit < at + s.bytes.size()) found = true;
    }
    for (const DataBuffer& chunk : chunk_stream(carrier, chunking)) {
      if (scan_buffer(chunk, ScanConfig::baseline()).verdict.is_shellcode()) found = false;
    }
    if (found) ++detected;
  }
  std::ostringstream d;
  d << detected << "/20 boundary-straddling placements detected";
  return {detected == 20, d.str()};
}

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf);
  const std::vector<CorpusSample> corpus = full_corpus();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"detection completeness", detection_completeness},
      {"zero false positives", zero_false_positives},
      {"evasion reproduction", evasion_reproduction},
      {"indirect-call GetPC semantics", pushed_stub_semantics},
      {"decryption round trip", round_trip},
      {"budget enforcement", budget_enforcement},
      {"monotonicity sweeps", [&] { return monotonicity(corpus); }},
      {"parallel determinism", [&] { return determinism(corpus); }},
      {"chunk-boundary planting", boundary_planting},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << "\n";
  }
  return failures == 0 ? 0 : 1;
}
