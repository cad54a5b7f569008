#include <CLI11.hpp>

#include <map>
#include <vector>

#include "nlemu/cli/commands.hpp"
#include "nlemu/cli/report.hpp"
#include "nlemu/error.hpp"

namespace nlemu::cli {

namespace {

void add_tuning(CLI::App& app, Tuning& t) {
  app.add_option("--threshold", t.threshold, "Distinct payload reads after GetPC that convict")
      ->capture_default_str();
  app.add_option("--insn-budget", t.insn_budget, "Instruction budget per chain")
      ->capture_default_str();
  app.add_option("--wall-budget", t.wall_budget_ms, "Milliseconds per buffer")
      ->capture_default_str();
  app.add_option("--chunk-max", t.chunk_max, "Largest buffer cut from a stream")
      ->capture_default_str();
  app.add_option("--overlap", t.overlap, "Bytes shared by consecutive chunks")
      ->capture_default_str();
  app.add_flag("--prefix-only", t.prefix_only, "Inspect only the first chunk of each stream");
  app.add_option("--seed", t.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--registers", t.registers, "Initial register policy")
      ->check(CLI::IsMember({"zeroed", "randomized"}))
      ->capture_default_str();
  app.add_option("--jobs", t.jobs, "Worker threads per buffer")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  app.add_option("--json", t.json_path, "Write the structured report here ('-' for stdout)");
  app.add_option_function<std::string>(
         "--syscall-model", [&t](const std::string& v) { t.syscall_model = v == "on"; },
         "Model the allocate/copy system calls")
      ->check(CLI::IsMember({"on", "off"}))
      ->default_str("off");
  app.add_flag("--timings", t.timings, "Include wall-clock timings in the structured report");
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network-level emulation shellcode detector and corpus toolkit", "nlemu"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  ScanOptions scan;
  std::string scan_profile = "baseline";
  std::string scan_format = "raw";
  auto* scan_cmd = app.add_subcommand("scan", "Scan a byte stream for shellcode");
  scan_cmd->add_option("input", scan.input, "Input file, or '-' for standard input")
      ->capture_default_str();
  scan_cmd->add_option("--format", scan_format, "Input encoding")
      ->check(CLI::IsMember({"raw", "hex"}))
      ->capture_default_str();
  scan_cmd->add_option("--profile", scan_profile, "Heuristic profile")
      ->check(CLI::IsMember({"baseline", "extended"}))
      ->capture_default_str();
  add_tuning(*scan_cmd, scan.tuning);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate corpus samples with sidecars");
  gen_cmd->add_option("--variant", gen.variant, "Variant name, or 'all'")->required();
  gen_cmd->add_option("--count", gen.count, "Samples per variant")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "First sample seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->capture_default_str();
  gen_cmd->add_option("--payload-length", gen.payload_length, "Payload bytes")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 16))
      ->capture_default_str();
  gen_cmd->add_option("--junk-density", gen.junk_density, "Chance of each further junk unit")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen_cmd->add_flag("--nul-free", gen.nul_free, "Emit no 0x00 bytes");
  gen_cmd->add_option("--carrier", gen.carrier, "Embed each sample in this many random bytes")
      ->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score the detector against a corpus directory");
  eval_cmd->add_option("dir", eval.dir, "Directory of samples and sidecars")->required();
  eval_cmd->add_option("--profile", eval.profile, "baseline, extended or both")
      ->check(CLI::IsMember({"baseline", "extended", "both"}))
      ->capture_default_str();
  eval_cmd->add_option("--background", eval.background, "Background bytes per kind")
      ->capture_default_str();
  add_tuning(*eval_cmd, eval.tuning);

  std::vector<const char*> argv{"nlemu"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitBenign;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitBenign;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitBenign;
  } catch (const CLI::ParseError& e) {
    err << "nlemu: " << e.what() << "\n";
    err << "run 'nlemu --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (scan_cmd->parsed()) {
      scan.format = *parse_input_format(scan_format);
      scan.profile = *parse_profile(scan_profile);
      return cmd_scan(scan, out, err);
    }
    if (gen_cmd->parsed()) return cmd_gen(gen, out, err);
    return cmd_eval(eval, out, err);
  } catch (const Error& e) {
    err << "nlemu: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace nlemu::cli
