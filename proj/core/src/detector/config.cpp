#include "nlemu/detector/config.hpp"

#include "nlemu/error.hpp"

namespace nlemu {

std::string_view profile_name(Profile p) {
  return p == Profile::baseline ? "baseline" : "extended";
}

std::optional<Profile> parse_profile(std::string_view name) {
  if (name == "baseline") return Profile::baseline;
  if (name == "extended") return Profile::extended;
  return std::nullopt;
}

ScanConfig ScanConfig::baseline() { return {}; }

ScanConfig ScanConfig::extended() {
  ScanConfig c;
  c.getpc_modes = GetPCModes::extended();
  c.layout.stack_resident_buffer = true;
  return c;
}

ScanConfig ScanConfig::for_profile(Profile p) {
  return p == Profile::baseline ? baseline() : extended();
}

void ScanConfig::validate() const {
  if (payload_read_threshold < 1) throw ParamError("payload_read_threshold must be >= 1");
  if (instruction_budget < 1) throw ParamError("instruction_budget must be >= 1");
  if (wall_budget.count() < 0) throw ParamError("wall_budget must be non-negative");
  if (jobs < 1) throw ParamError("jobs must be >= 1");
}

ChainConfig ScanConfig::chain_config() const {
  ChainConfig c;
  c.registers = register_policy;
  c.layout = layout;
  c.step.syscalls = syscalls;
  c.step.scratch_base = layout.scratch_base;
  c.instruction_budget = instruction_budget;
  c.loop_guard_window = loop_guard_window;
  return c;
}

}  // namespace nlemu
