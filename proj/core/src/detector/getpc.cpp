#include "nlemu/detector/getpc.hpp"

#include <algorithm>

namespace nlemu {

std::string_view getpc_kind_name(GetPCKind k) {
  switch (k) {
    case GetPCKind::call_rel: return "call_rel";
    case GetPCKind::call_indirect: return "call_indirect";
    case GetPCKind::fstenv: return "fstenv";
    case GetPCKind::fs_stack_probe: return "fs_stack_probe";
  }
  return "?";
}

std::optional<GetPCKind> parse_getpc_kind(std::string_view name) {
  for (auto k : {GetPCKind::call_rel, GetPCKind::call_indirect, GetPCKind::fstenv,
                 GetPCKind::fs_stack_probe}) {
    if (getpc_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

bool covers(const AccessEvent& e, std::uint32_t addr) {
  return addr >= e.addr && addr - e.addr < e.size;
}

bool read_back(const ExecutionTrace& t, std::uint32_t from, std::uint32_t addr) {
  for (std::size_t i = from; i < t.access_log.size(); ++i) {
    const auto& e = t.access_log[i];
    if (e.kind == AccessKind::read && covers(e, addr)) return true;
  }
  return false;
}

bool in_buffer_or_stack(const ExecutionTrace& t, std::uint32_t addr) {
  return t.buffer.contains(addr) || t.stack.contains(addr);
}

}  // namespace

std::vector<GetPCEvent> detect_getpc_events(const ExecutionTrace& t, const GetPCModes& modes) {
  std::vector<GetPCEvent> events;
  for (const auto& m : t.markers) {
    switch (m.kind) {
      case MarkerKind::call_rel:
        if (modes.call_rel && t.buffer.contains(m.target)) {
          events.push_back({GetPCKind::call_rel, m.at_eip, m.saved_value, m.log_index});
        }
        break;
      case MarkerKind::call_indirect:
        if (modes.call_indirect && in_buffer_or_stack(t, m.target) &&
            read_back(t, m.log_index, m.slot_addr)) {
          events.push_back({GetPCKind::call_indirect, m.at_eip, m.saved_value, m.log_index});
        }
        break;
      case MarkerKind::fpu_env_store:
        if (modes.fstenv && in_buffer_or_stack(t, m.saved_value) &&
            read_back(t, m.log_index, m.slot_addr)) {
          events.push_back({GetPCKind::fstenv, m.at_eip, m.saved_value, m.log_index});
        }
        break;
    }
  }

  if (modes.stack_scan_fs) {
    const std::uint32_t top_addr = t.fs_base + kTibStackTopOffset;
    const std::uint32_t limit_addr = t.fs_base + kTibStackLimitOffset;
    bool seen_top = false;
    bool seen_limit = false;
    for (std::size_t i = 0; i < t.access_log.size() && !(seen_top && seen_limit); ++i) {
      const auto& e = t.access_log[i];
      if (e.kind != AccessKind::read) continue;
      const auto after = static_cast<std::uint32_t>(i + 1);
      if (!seen_top && covers(e, top_addr)) {
        seen_top = true;
        events.push_back({GetPCKind::fs_stack_probe, e.at_eip, t.tib_stack_top, after});
      }
      if (!seen_limit && covers(e, limit_addr)) {
        seen_limit = true;
        events.push_back({GetPCKind::fs_stack_probe, e.at_eip, t.tib_stack_limit, after});
      }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const GetPCEvent& a, const GetPCEvent& b) { return a.log_index < b.log_index; });
  }
  return events;
}

}  // namespace nlemu
