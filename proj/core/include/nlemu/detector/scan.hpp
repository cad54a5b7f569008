#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "nlemu/data_buffer.hpp"
#include "nlemu/detector/classify.hpp"
#include "nlemu/detector/config.hpp"
#include "nlemu/detector/getpc.hpp"

namespace nlemu {

struct ChainSummary {
  std::uint32_t offset = 0;
  std::uint64_t retired = 0;
  TerminationReason termination = TerminationReason::budget_exhausted;
  std::vector<GetPCEvent> getpc;
  std::uint32_t payload_reads = 0;  // after the earliest GetPC event; 0 without one
  bool convicted = false;

  friend bool operator==(const ChainSummary&, const ChainSummary&) = default;
};

struct DetectionReport {
  std::string buffer_id;
  Origin origin;
  std::uint32_t length = 0;
  std::vector<ChainSummary> chains;  // offset order; skipped offsets absent
  std::uint32_t skipped_offsets = 0;
  bool wall_budget_exceeded = false;
  Verdict verdict;
  std::chrono::nanoseconds elapsed{0};
  ScanConfig config;
};

// Emulates every offset of `buffer` and aggregates the per-chain verdicts.
// The wall budget is checked between chains; offsets not started in time are
// counted as skipped. Results are independent of config.jobs.
DetectionReport scan_buffer(const DataBuffer& buffer, const ScanConfig& config,
                            std::string buffer_id = {});

}  // namespace nlemu
