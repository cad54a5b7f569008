#include "nlemu/detector/scan.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>

namespace nlemu {

namespace {

constexpr std::size_t kOffsetsPerClaim = 64;

struct ChainResult {
  ChainSummary summary;
  Verdict verdict;
};

ChainResult summarize(const ExecutionTrace& trace, const ScanConfig& config) {
  ChainSummary s;
  Verdict v;
  s.offset = trace.entry_offset;
  s.retired = trace.retired;
  s.termination = trace.termination;
  s.getpc = detect_getpc_events(trace, config.getpc_modes);
  if (!s.getpc.empty()) {
    v = classify_events(trace, s.getpc, config.payload_read_threshold);
    s.payload_reads = distinct_buffer_reads_after(trace, s.getpc.front().log_index);
    s.convicted = v.is_shellcode();
  }
  return {std::move(s), std::move(v)};
}

}  // namespace

DetectionReport scan_buffer(const DataBuffer& buffer, const ScanConfig& config,
                            std::string buffer_id) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  DetectionReport report;
  report.buffer_id = std::move(buffer_id);
  report.origin = buffer.origin;
  report.length = static_cast<std::uint32_t>(buffer.size());
  report.config = config;
  if (buffer.empty()) return report;

  const ChainConfig chain = [&] {
    ChainConfig c = config.chain_config();
    c.layout.buffer_base = buffer.base;
    return c;
  }();
  const std::size_t n = buffer.size();
  std::vector<std::optional<ChainResult>> results(n);
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> out_of_time{false};
  const auto deadline = start + config.wall_budget;

  auto worker = [&] {
    for (;;) {
      const std::size_t first = cursor.fetch_add(kOffsetsPerClaim);
      if (first >= n) return;
      const std::size_t last = std::min(n, first + kOffsetsPerClaim);
      for (std::size_t off = first; off < last; ++off) {
        if (out_of_time.load(std::memory_order_relaxed)) return;
        if (std::chrono::steady_clock::now() >= deadline) {
          out_of_time.store(true);
          return;
        }
        const ChainRun run = emulate_chain(buffer.view(), off, chain);
        results[off] = summarize(run.trace, config);
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }

  report.chains.reserve(n);
  for (auto& r : results) {
    if (!r) {
      ++report.skipped_offsets;
      continue;
    }
    if (r->summary.convicted && !report.verdict.is_shellcode()) report.verdict = r->verdict;
    report.chains.push_back(std::move(r->summary));
  }
  report.wall_budget_exceeded = out_of_time.load();
  report.elapsed = std::chrono::steady_clock::now() - start;
  return report;
}

}  // namespace nlemu
