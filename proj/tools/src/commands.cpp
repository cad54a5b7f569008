#include "nlemu/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "nlemu/cli/report.hpp"
#include "nlemu/corpus/background.hpp"
#include "nlemu/corpus/variants.hpp"
#include "nlemu/error.hpp"

namespace nlemu::cli {

namespace fs = std::filesystem;
using nlohmann::json;

ScanConfig make_scan_config(Profile profile, const Tuning& t) {
  ScanConfig c = ScanConfig::for_profile(profile);
  c.payload_read_threshold = t.threshold;
  c.instruction_budget = t.insn_budget;
  c.wall_budget = std::chrono::milliseconds(t.wall_budget_ms);
  c.jobs = t.jobs;
  c.syscalls.enabled = t.syscall_model;
  if (t.registers == "zeroed") {
    c.register_policy = RegisterPolicy::zeroed();
  } else if (t.registers == "randomized") {
    c.register_policy = RegisterPolicy::randomized(t.seed);
  } else {
    throw ParamError("unknown register policy: " + t.registers);
  }
  c.validate();
  return c;
}

ChunkOptions make_chunk_options(const Tuning& t) {
  ChunkOptions o;
  o.max_len = t.chunk_max;
  o.overlap = t.overlap;
  o.prefix_only = t.prefix_only;
  if (o.max_len == 0 || o.overlap >= o.max_len) {
    throw ParamError("chunking requires 0 <= overlap < chunk-max");
  }
  return o;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Writes the document to the requested path; "-" means standard output.
void emit_document(const ReportDocument& doc, const std::string& path, std::ostream& out) {
  const std::string text = serialize(doc);
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::trunc);
  file << text;
  if (!file) throw IoError("cannot write " + path);
}

std::string describe(const BufferRecord& b) {
  std::ostringstream s;
  s << b.id << ": " << b.verdict;
  if (b.offset && b.evidence) {
    s << " at offset " << *b.offset << " (stream offset " << b.stream_offset + *b.offset
      << "), getpc=" << b.evidence->getpc.kind << " reads=" << b.evidence->payload_reads
      << " termination=" << b.evidence->termination;
  } else {
    s << " (" << b.chains_run << " chains";
    if (b.skipped_offsets > 0) s << ", " << b.skipped_offsets << " offsets skipped";
    s << ")";
  }
  return s.str();
}

}  // namespace

int cmd_scan(const ScanOptions& o, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  const ScanConfig config = make_scan_config(o.profile, o.tuning);
  const ChunkOptions chunking = make_chunk_options(o.tuning);
  const std::vector<std::uint8_t> stream = load_input(o.input, o.format);
  if (stream.empty()) {
    err << "nlemu: empty input\n";
    return kExitUsage;
  }
  const std::string source = o.input == "-" ? "<stdin>" : o.input;
  const std::vector<DataBuffer> chunks = chunk_stream(stream, chunking, source);

  ReportDocument doc;
  doc.command = "scan";
  doc.config = config_echo(config, chunking);
  doc.config["profile"] = profile_name(o.profile);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const DetectionReport r = scan_buffer(chunks[i], config, source + "#" + std::to_string(i));
    doc.buffers.push_back(project(r, o.tuning.timings));
  }
  doc.aggregate = aggregate_of(doc.buffers);
  if (o.tuning.timings) doc.wall_time_ms = ms_since(start);

  if (o.tuning.json_path != "-") {
    for (const BufferRecord& b : doc.buffers) out << describe(b) << '\n';
    out << "summary: " << doc.aggregate.buffers_scanned << " buffers, " << doc.aggregate.convicted
        << " shellcode, " << doc.aggregate.skipped_offsets << " offsets skipped\n";
  }
  if (!o.tuning.json_path.empty()) emit_document(doc, o.tuning.json_path, out);
  return doc.aggregate.convicted > 0 ? kExitShellcode : kExitBenign;
}

int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string_view> names;
  if (o.variant == "all") {
    names.assign(kVariantNames.begin(), kVariantNames.end());
  } else if (is_variant(o.variant)) {
    names.push_back(o.variant);
  } else {
    err << "nlemu: unknown variant '" << o.variant << "'\n";
    return kExitUsage;
  }
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec || !fs::is_directory(o.out_dir)) {
    err << "nlemu: cannot create output directory " << o.out_dir << "\n";
    return kExitUsage;
  }

  VariantOptions vo;
  vo.payload_length = o.payload_length;
  vo.junk_density = o.junk_density;
  vo.nul_free = o.nul_free;
  vo.carrier_length = o.carrier;
  for (std::string_view name : names) {
    for (std::size_t i = 0; i < o.count; ++i) {
      const std::uint64_t seed = o.seed + i;
      const CorpusSample s = generate_variant(name, seed, vo);
      std::ostringstream stem;
      stem << name << '_' << std::setw(4) << std::setfill('0') << i;
      write_sample(o.out_dir, stem.str(), s);
      out << stem.str() << ".bin variant=" << s.variant << " seed=" << s.seed
          << " bytes=" << s.bytes.size() << " entry=" << s.entry_offset
          << " baseline=" << label_name(s.expected_baseline_verdict)
          << " extended=" << label_name(s.expected_extended_verdict) << '\n';
    }
  }
  return kExitBenign;
}

namespace {

struct Cell {
  std::uint64_t samples = 0;
  std::uint64_t expected_shellcode = 0;
  std::uint64_t detected = 0;
  std::uint64_t mismatches = 0;
};

struct NamedSample {
  std::string stem;
  CorpusSample sample;
};

std::vector<NamedSample> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> sidecars;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      sidecars.push_back(entry.path());
    }
  }
  std::sort(sidecars.begin(), sidecars.end());
  std::vector<NamedSample> out;
  for (const fs::path& p : sidecars) {
    out.push_back({p.stem().string(), read_sample(p)});
  }
  return out;
}

json cell_json(const Cell& c) {
  return {{"samples", c.samples},
          {"expected_shellcode", c.expected_shellcode},
          {"expected_benign", c.samples - c.expected_shellcode},
          {"detected", c.detected},
          {"evaded", c.samples - c.detected},
          {"mismatches", c.mismatches}};
}

}  // namespace

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  std::ostringstream text;
  std::vector<Profile> profiles;
  if (o.profile == "both") {
    profiles = {Profile::baseline, Profile::extended};
  } else if (auto p = parse_profile(o.profile)) {
    profiles = {*p};
  } else {
    err << "nlemu: unknown profile '" << o.profile << "'\n";
    return kExitUsage;
  }
  const ChunkOptions chunking = make_chunk_options(o.tuning);
  const std::vector<NamedSample> corpus = load_corpus(o.dir);
  if (corpus.empty()) {
    err << "nlemu: no samples in " << o.dir << "\n";
    return kExitUsage;
  }

  ReportDocument doc;
  doc.command = "eval";
  json evaluation = json::object();
  bool contradiction = false;
  for (Profile profile : profiles) {
    const ScanConfig config = make_scan_config(profile, o.tuning);
    const std::string pname(profile_name(profile));
    doc.config[pname] = config_echo(config, chunking);

    std::map<std::string, Cell> cells;
    for (const NamedSample& ns : corpus) {
      const CorpusSample& s = ns.sample;
      const Label expected = profile == Profile::baseline ? s.expected_baseline_verdict
                                                          : s.expected_extended_verdict;
      bool detected = false;
      const auto chunks = chunk_stream(s.bytes, chunking, ns.stem);
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        std::string id = pname + "/" + ns.stem;
        if (chunks.size() > 1) id += "#" + std::to_string(i);
        const DetectionReport r = scan_buffer(chunks[i], config, id);
        detected = detected || r.verdict.is_shellcode();
        doc.buffers.push_back(project(r, o.tuning.timings));
      }
      Cell& cell = cells[s.variant];
      ++cell.samples;
      if (expected == Label::shellcode) ++cell.expected_shellcode;
      if (detected) ++cell.detected;
      if (detected != (expected == Label::shellcode)) {
        ++cell.mismatches;
        contradiction = true;
      }
    }

    json background = json::object();
    std::uint64_t kind_index = 0;
    for (auto kind : {BackgroundKind::uniform_random, BackgroundKind::ascii_text,
                      BackgroundKind::http_like}) {
      const std::string kname(background_kind_name(kind));
      std::uint64_t buffers = 0;
      std::uint64_t false_positives = 0;
      if (o.background > 0) {
        const auto bytes = generate_background(kind, o.background, o.tuning.seed + kind_index);
        const auto chunks = chunk_stream(bytes, chunking, "background/" + kname);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
          const DetectionReport r = scan_buffer(
              chunks[i], config, pname + "/background/" + kname + "#" + std::to_string(i));
          ++buffers;
          if (r.verdict.is_shellcode()) ++false_positives;
          doc.buffers.push_back(project(r, o.tuning.timings));
        }
      }
      if (false_positives > 0) contradiction = true;
      background[kname] = {{"buffers", buffers}, {"false_positives", false_positives}};
      ++kind_index;
    }

    json variants = json::object();
    text << "profile " << pname << "\n";
    text << std::left << std::setw(24) << "variant" << std::right << std::setw(8) << "samples"
        << std::setw(10) << "exp_shell" << std::setw(10) << "detected" << std::setw(8)
        << "evaded" << std::setw(12) << "mismatches" << "\n";
    for (const auto& [variant, c] : cells) {
      variants[variant] = cell_json(c);
      text << std::left << std::setw(24) << variant << std::right << std::setw(8) << c.samples
          << std::setw(10) << c.expected_shellcode << std::setw(10) << c.detected << std::setw(8)
          << c.samples - c.detected << std::setw(12) << c.mismatches << "\n";
    }
    for (const auto& [kname, b] : background.items()) {
      text << "background " << kname << ": " << b["buffers"].get<std::uint64_t>()
          << " buffers, " << b["false_positives"].get<std::uint64_t>() << " false positives\n";
    }
    evaluation[pname] = {{"variants", variants}, {"background", background}};
  }
  doc.evaluation = evaluation;
  doc.aggregate = aggregate_of(doc.buffers);
  if (o.tuning.timings) doc.wall_time_ms = ms_since(start);
  text << (contradiction ? "result: verdicts contradict the corpus expectations\n"
                        : "result: all verdicts match the corpus expectations\n");
  if (o.tuning.json_path != "-") out << text.str();
  if (!o.tuning.json_path.empty()) emit_document(doc, o.tuning.json_path, out);
  return contradiction ? kExitContradiction : kExitBenign;
}

}  // namespace nlemu::cli
