#include "nlemu/cli/report.hpp"

#include "nlemu/error.hpp"

namespace nlemu::cli {

using nlohmann::json;

namespace {

GetPCRecord record_of(const GetPCEvent& e) {
  return {std::string(getpc_kind_name(e.kind)), e.at_eip, e.recovered_address};
}

template <typename T>
void get_optional(const json& j, const char* name, std::optional<T>& out) {
  if (j.contains(name) && !j.at(name).is_null()) {
    out = j.at(name).get<T>();
  } else {
    out.reset();
  }
}

}  // namespace

BufferRecord project(const DetectionReport& report, bool timings) {
  BufferRecord b;
  b.id = report.buffer_id;
  b.source = report.origin.source;
  b.stream_offset = report.origin.stream_offset;
  b.length = report.length;
  b.verdict = std::string(label_name(report.verdict.label));
  b.offset = report.verdict.offset;
  if (report.verdict.evidence) {
    const Evidence& e = *report.verdict.evidence;
    b.evidence = EvidenceRecord{record_of(e.getpc), e.payload_reads,
                                std::string(termination_name(e.termination))};
  }
  b.chains_run = static_cast<std::uint32_t>(report.chains.size());
  b.skipped_offsets = report.skipped_offsets;
  b.wall_budget_exceeded = report.wall_budget_exceeded;
  for (const ChainSummary& c : report.chains) {
    ++b.terminations[std::string(termination_name(c.termination))];
    if (c.getpc.empty()) continue;
    ChainRecord r;
    r.offset = c.offset;
    r.retired = c.retired;
    r.termination = std::string(termination_name(c.termination));
    for (const GetPCEvent& e : c.getpc) r.getpc.push_back(record_of(e));
    r.payload_reads = c.payload_reads;
    r.convicted = c.convicted;
    b.getpc_chains.push_back(std::move(r));
  }
  if (timings) {
    b.elapsed_ms = std::chrono::duration<double, std::milli>(report.elapsed).count();
  }
  return b;
}

Aggregate aggregate_of(const std::vector<BufferRecord>& buffers) {
  Aggregate a;
  for (const BufferRecord& b : buffers) {
    ++a.buffers_scanned;
    if (b.verdict == label_name(Label::shellcode)) ++a.convicted;
    a.skipped_offsets += b.skipped_offsets;
  }
  return a;
}

json config_echo(const ScanConfig& c, const ChunkOptions& chunking) {
  const char* policy = "zeroed";
  if (c.register_policy.kind == RegisterPolicy::Kind::randomized) policy = "randomized";
  if (c.register_policy.kind == RegisterPolicy::Kind::fixed) policy = "fixed";
  return {
      {"payload_read_threshold", c.payload_read_threshold},
      {"instruction_budget", c.instruction_budget},
      {"wall_budget_ms", c.wall_budget.count()},
      {"getpc_modes",
       {{"call_rel", c.getpc_modes.call_rel},
        {"fstenv", c.getpc_modes.fstenv},
        {"call_indirect", c.getpc_modes.call_indirect},
        {"stack_scan_fs", c.getpc_modes.stack_scan_fs}}},
      {"loop_guard_window", c.loop_guard_window},
      {"register_policy", {{"kind", policy}, {"seed", c.register_policy.seed}}},
      {"layout",
       {{"buffer_base", c.layout.buffer_base},
        {"stack_base", c.layout.stack_base},
        {"stack_size", c.layout.stack_size},
        {"tib_base", c.layout.tib_base},
        {"scratch_base", c.layout.scratch_base},
        {"stack_resident_buffer", c.layout.stack_resident_buffer}}},
      {"syscall_model",
       {{"enabled", c.syscalls.enabled},
        {"allocate_number", c.syscalls.allocate_number},
        {"copy_number", c.syscalls.copy_number}}},
      {"chunking",
       {{"max_len", chunking.max_len},
        {"overlap", chunking.overlap},
        {"prefix_only", chunking.prefix_only}}},
  };
}

void to_json(json& j, const GetPCRecord& r) {
  j = {{"kind", r.kind}, {"at_eip", r.at_eip}, {"recovered_address", r.recovered_address}};
}

void from_json(const json& j, GetPCRecord& r) {
  j.at("kind").get_to(r.kind);
  j.at("at_eip").get_to(r.at_eip);
  j.at("recovered_address").get_to(r.recovered_address);
}

void to_json(json& j, const ChainRecord& r) {
  j = {{"offset", r.offset},
       {"retired", r.retired},
       {"termination", r.termination},
       {"getpc", r.getpc},
       {"payload_reads", r.payload_reads},
       {"convicted", r.convicted}};
}

void from_json(const json& j, ChainRecord& r) {
  j.at("offset").get_to(r.offset);
  j.at("retired").get_to(r.retired);
  j.at("termination").get_to(r.termination);
  j.at("getpc").get_to(r.getpc);
  j.at("payload_reads").get_to(r.payload_reads);
  j.at("convicted").get_to(r.convicted);
}

void to_json(json& j, const EvidenceRecord& r) {
  j = {{"getpc", r.getpc}, {"payload_reads", r.payload_reads}, {"termination", r.termination}};
}

void from_json(const json& j, EvidenceRecord& r) {
  j.at("getpc").get_to(r.getpc);
  j.at("payload_reads").get_to(r.payload_reads);
  j.at("termination").get_to(r.termination);
}

void to_json(json& j, const BufferRecord& r) {
  j = {{"id", r.id},
       {"source", r.source},
       {"stream_offset", r.stream_offset},
       {"length", r.length},
       {"verdict", r.verdict},
       {"offset", r.offset ? json(*r.offset) : json(nullptr)},
       {"evidence", r.evidence ? json(*r.evidence) : json(nullptr)},
       {"chains_run", r.chains_run},
       {"skipped_offsets", r.skipped_offsets},
       {"wall_budget_exceeded", r.wall_budget_exceeded},
       {"terminations", r.terminations},
       {"getpc_chains", r.getpc_chains}};
  if (r.elapsed_ms) j["elapsed_ms"] = *r.elapsed_ms;
}

void from_json(const json& j, BufferRecord& r) {
  j.at("id").get_to(r.id);
  j.at("source").get_to(r.source);
  j.at("stream_offset").get_to(r.stream_offset);
  j.at("length").get_to(r.length);
  j.at("verdict").get_to(r.verdict);
  get_optional(j, "offset", r.offset);
  get_optional(j, "evidence", r.evidence);
  j.at("chains_run").get_to(r.chains_run);
  j.at("skipped_offsets").get_to(r.skipped_offsets);
  j.at("wall_budget_exceeded").get_to(r.wall_budget_exceeded);
  j.at("terminations").get_to(r.terminations);
  j.at("getpc_chains").get_to(r.getpc_chains);
  get_optional(j, "elapsed_ms", r.elapsed_ms);
}

void to_json(json& j, const Aggregate& r) {
  j = {{"buffers_scanned", r.buffers_scanned},
       {"convicted", r.convicted},
       {"skipped_offsets", r.skipped_offsets}};
}

void from_json(const json& j, Aggregate& r) {
  j.at("buffers_scanned").get_to(r.buffers_scanned);
  j.at("convicted").get_to(r.convicted);
  j.at("skipped_offsets").get_to(r.skipped_offsets);
}

void to_json(json& j, const ReportDocument& r) {
  j = {{"schema", r.schema},  {"tool", r.tool},           {"version", r.version},
       {"command", r.command}, {"config", r.config},      {"buffers", r.buffers},
       {"aggregate", r.aggregate}};
  if (r.wall_time_ms) j["wall_time_ms"] = *r.wall_time_ms;
  if (!r.evaluation.is_null()) j["evaluation"] = r.evaluation;
}

void from_json(const json& j, ReportDocument& r) {
  try {
    j.at("schema").get_to(r.schema);
    if (r.schema != kReportSchema) throw FormatError("unsupported report schema");
    j.at("tool").get_to(r.tool);
    j.at("version").get_to(r.version);
    j.at("command").get_to(r.command);
    r.config = j.at("config");
    j.at("buffers").get_to(r.buffers);
    j.at("aggregate").get_to(r.aggregate);
    get_optional(j, "wall_time_ms", r.wall_time_ms);
    r.evaluation = j.contains("evaluation") ? j.at("evaluation") : json();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

std::string serialize(const ReportDocument& doc) { return json(doc).dump(2) + "\n"; }

ReportDocument parse_report(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw FormatError("report is not valid JSON");
  return j.get<ReportDocument>();
}

}  // namespace nlemu::cli
