#include "nlemu/detector/classify.hpp"

#include <algorithm>

namespace nlemu {

std::string_view label_name(Label l) { return l == Label::shellcode ? "shellcode" : "benign"; }

std::optional<Label> parse_label(std::string_view name) {
  if (name == "shellcode") return Label::shellcode;
  if (name == "benign") return Label::benign;
  return std::nullopt;
}

std::uint32_t distinct_buffer_reads_after(const ExecutionTrace& trace, std::uint32_t log_index) {
  std::vector<std::uint32_t> addrs;
  for (std::size_t i = log_index; i < trace.access_log.size(); ++i) {
    const auto& e = trace.access_log[i];
    if (e.kind == AccessKind::read && e.in_buffer) addrs.push_back(e.addr);
  }
  std::sort(addrs.begin(), addrs.end());
  return static_cast<std::uint32_t>(std::unique(addrs.begin(), addrs.end()) - addrs.begin());
}

Verdict classify_events(const ExecutionTrace& trace, const std::vector<GetPCEvent>& events,
                        std::uint32_t payload_read_threshold) {
  // Reads after a later event are a subset of those after an earlier one, so
  // the first event that reaches the threshold is also the earliest.
  for (const auto& e : events) {
    const std::uint32_t reads = distinct_buffer_reads_after(trace, e.log_index);
    if (reads >= payload_read_threshold) {
      Verdict v;
      v.label = Label::shellcode;
      v.offset = trace.entry_offset;
      v.evidence = Evidence{e, reads, trace.termination};
      return v;
    }
  }
  return Verdict::benign();
}

Verdict classify_trace(const ExecutionTrace& trace, const ScanConfig& config) {
  return classify_events(trace, detect_getpc_events(trace, config.getpc_modes),
                         config.payload_read_threshold);
}

}  // namespace nlemu
