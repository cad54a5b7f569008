#include <benchmark/benchmark.h>

#include <vector>

#include "nlemu/corpus/background.hpp"
#include "nlemu/corpus/shellcode.hpp"
#include "nlemu/cpu/chain.hpp"
#include "nlemu/cpu/instruction.hpp"
#include "nlemu/detector/scan.hpp"

namespace {

using namespace nlemu;

void BM_DecodeRandom(benchmark::State& state) {
  const auto bytes = generate_background(BackgroundKind::uniform_random, 1 << 16, 1);
  std::size_t off = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_instruction(bytes, off));
    off = (off + 1) % (bytes.size() - 16);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DecodeRandom);

void BM_RunChainDecryptor(benchmark::State& state) {
  GeneratorSpec spec;
  spec.payload_length = static_cast<std::size_t>(state.range(0));
  const CorpusSample s = generate_shellcode(spec, 7);
  DataBuffer b;
  b.bytes = s.bytes;
  ChainConfig config;
  config.instruction_budget = s.replay_budget;
  std::uint64_t retired = 0;
  for (auto _ : state) {
    const ExecutionTrace t = run_chain(b, s.entry_offset, config);
    retired += t.retired;
  }
  state.counters["insn/s"] =
      benchmark::Counter(static_cast<double>(retired), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RunChainDecryptor)->Arg(64)->Arg(1024);

void BM_ScanBuffer(benchmark::State& state) {
  DataBuffer b;
  b.bytes = generate_background(static_cast<BackgroundKind>(state.range(0)), 1 << 16, 42);
  const ScanConfig config = ScanConfig::baseline();
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan_buffer(b, config));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(b.size()));
}
BENCHMARK(BM_ScanBuffer)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_GenerateShellcode(benchmark::State& state) {
  GeneratorSpec spec;
  spec.junk_density = 0.5;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_shellcode(spec, seed++));
  }
}
BENCHMARK(BM_GenerateShellcode);

}  // namespace
