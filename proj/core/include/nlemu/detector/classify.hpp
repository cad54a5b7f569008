#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "nlemu/cpu/chain.hpp"
#include "nlemu/detector/config.hpp"
#include "nlemu/detector/getpc.hpp"

namespace nlemu {

enum class Label : std::uint8_t { benign, shellcode };

std::string_view label_name(Label l);
std::optional<Label> parse_label(std::string_view name);

struct Evidence {
  GetPCEvent getpc;
  std::uint32_t payload_reads = 0;  // distinct in-buffer read addresses after getpc
  TerminationReason termination = TerminationReason::budget_exhausted;

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct Verdict {
  Label label = Label::benign;
  std::optional<std::uint32_t> offset;  // set iff shellcode
  std::optional<Evidence> evidence;     // set iff shellcode

  static Verdict benign() { return {}; }
  bool is_shellcode() const { return label == Label::shellcode; }

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Number of distinct buffer addresses read by the emulated code (not by a
// modeled syscall) at or after `log_index`.
std::uint32_t distinct_buffer_reads_after(const ExecutionTrace& trace, std::uint32_t log_index);

// Shellcode iff some GetPC event is followed by at least
// payload_read_threshold distinct in-buffer reads.
Verdict classify_trace(const ExecutionTrace& trace, const ScanConfig& config);
Verdict classify_events(const ExecutionTrace& trace, const std::vector<GetPCEvent>& events,
                        std::uint32_t payload_read_threshold);

}  // namespace nlemu
