#include "nlemu/cpu/chain.hpp"

#include <algorithm>
#include <stdexcept>

#include "nlemu/detector/loop_guard.hpp"

namespace nlemu {

namespace {

std::vector<std::uint32_t> distinct_buffer_addresses(const std::vector<AccessEvent>& log,
                                                     AccessKind kind) {
  std::vector<std::uint32_t> out;
  for (const auto& e : log) {
    if (e.kind == kind && e.in_buffer) out.push_back(e.addr);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

bool ExecutionTrace::same_behavior(const ExecutionTrace& o) const {
  return entry_offset == o.entry_offset && entry_address == o.entry_address &&
         retired == o.retired && termination == o.termination && final_eip == o.final_eip &&
         buffer == o.buffer && stack == o.stack && fs_base == o.fs_base &&
         tib_stack_top == o.tib_stack_top && tib_stack_limit == o.tib_stack_limit &&
         access_log == o.access_log && markers == o.markers;
}

std::vector<std::uint32_t> ExecutionTrace::buffer_read_addresses() const {
  return distinct_buffer_addresses(access_log, AccessKind::read);
}

std::vector<std::uint32_t> ExecutionTrace::buffer_write_addresses() const {
  return distinct_buffer_addresses(access_log, AccessKind::write);
}

ChainRun emulate_chain(std::span<const std::uint8_t> buffer, std::size_t entry_offset,
                       const ChainConfig& config) {
  if (entry_offset >= buffer.size()) throw std::out_of_range("entry offset outside buffer");
  const auto start = std::chrono::steady_clock::now();

  auto [cpu, mem] = init_state(config.registers, config.layout, buffer);
  cpu.eip += static_cast<std::uint32_t>(entry_offset);
  if (config.step.return_sentinel) {
    const std::uint32_t v = *config.step.return_sentinel;
    const std::uint8_t raw[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                                 static_cast<std::uint8_t>(v >> 16),
                                 static_cast<std::uint8_t>(v >> 24)};
    mem.write(cpu.reg(Reg::esp), raw, /*force=*/true);
  }

  ExecutionTrace trace;
  trace.entry_offset = static_cast<std::uint32_t>(entry_offset);
  trace.entry_address = cpu.eip;
  trace.buffer = mem.buffer();
  trace.stack = *mem.region_of_kind(RegionKind::stack);
  trace.fs_base = cpu.fs_base;
  trace.tib_stack_top = mem.read_u32(cpu.fs_base + kTibStackTopOffset).value_or(0);
  trace.tib_stack_limit = mem.read_u32(cpu.fs_base + kTibStackLimitOffset).value_or(0);

  LoopGuard guard(config.loop_guard_window);
  const bool guarded = config.loop_guard_window > 0;
  for (;;) {
    if (cpu.retired >= config.instruction_budget) {
      trace.termination = TerminationReason::budget_exhausted;
      break;
    }
    const StepOutcome out = step(cpu, mem, config.step);
    if (out.marker) trace.markers.push_back(*out.marker);
    if (out.terminated) {
      trace.termination = *out.terminated;
      break;
    }
    if (guarded && out.branched &&
        guard.observe(cpu.eip, state_hash(cpu)) == LoopVerdict::loop_detected) {
      trace.termination = TerminationReason::loop_detected;
      break;
    }
  }

  trace.retired = cpu.retired;
  trace.final_eip = cpu.eip;
  trace.access_log = mem.access_log();
  trace.elapsed = std::chrono::steady_clock::now() - start;
  return ChainRun{std::move(trace), cpu, std::move(mem)};
}

ExecutionTrace run_chain(const DataBuffer& buffer, std::size_t entry_offset,
                         const ChainConfig& config) {
  ChainConfig cfg = config;
  cfg.layout.buffer_base = buffer.base;
  ChainRun run = emulate_chain(buffer.view(), entry_offset, cfg);
  return std::move(run.trace);
}

}  // namespace nlemu
