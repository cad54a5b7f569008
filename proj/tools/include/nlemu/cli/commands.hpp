#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>

#include "nlemu/detector/config.hpp"
#include "nlemu/ingest/chunk.hpp"
#include "nlemu/ingest/input.hpp"

namespace nlemu::cli {

enum ExitCode : int {
  kExitBenign = 0,
  kExitShellcode = 1,
  kExitContradiction = 1,  // eval: a verdict disagrees with its sidecar
  kExitUsage = 2
};

// Detector and chunking settings shared by scan and eval.
struct Tuning {
  std::uint32_t threshold = 8;
  std::uint64_t insn_budget = 8192;
  std::uint64_t wall_budget_ms = 2000;
  std::size_t chunk_max = kDefaultChunkMax;
  std::size_t overlap = kDefaultChunkOverlap;
  bool prefix_only = false;
  std::uint64_t seed = 0;
  std::string registers = "zeroed";
  unsigned jobs = 1;
  bool syscall_model = false;
  bool timings = false;
  std::string json_path;  // "-" writes the document to standard output
};

// Throws ParamError on out-of-range values.
ScanConfig make_scan_config(Profile profile, const Tuning& tuning);
ChunkOptions make_chunk_options(const Tuning& tuning);

struct ScanOptions {
  std::string input = "-";
  InputFormat format = InputFormat::raw;
  Profile profile = Profile::baseline;
  Tuning tuning;
};

struct GenOptions {
  std::string variant;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::size_t payload_length = 64;
  double junk_density = 0.25;
  bool nul_free = false;
  std::size_t carrier = 0;
};

struct EvalOptions {
  std::string dir;
  std::string profile = "both";
  std::size_t background = 64 * 1024;  // bytes per background kind
  Tuning tuning;
};

int cmd_scan(const ScanOptions& options, std::ostream& out, std::ostream& err);
int cmd_gen(const GenOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

// Parses `args` (without the program name) and dispatches.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace nlemu::cli
