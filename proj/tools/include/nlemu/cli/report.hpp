#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlemu/detector/scan.hpp"
#include "nlemu/ingest/chunk.hpp"

namespace nlemu::cli {

inline constexpr int kReportSchema = 1;
inline constexpr const char* kToolName = "nlemu";
inline constexpr const char* kToolVersion = "0.1.0";

struct GetPCRecord {
  std::string kind;
  std::uint32_t at_eip = 0;
  std::uint32_t recovered_address = 0;

  friend bool operator==(const GetPCRecord&, const GetPCRecord&) = default;
};

struct ChainRecord {
  std::uint32_t offset = 0;
  std::uint64_t retired = 0;
  std::string termination;
  std::vector<GetPCRecord> getpc;
  std::uint32_t payload_reads = 0;
  bool convicted = false;

  friend bool operator==(const ChainRecord&, const ChainRecord&) = default;
};

struct EvidenceRecord {
  GetPCRecord getpc;
  std::uint32_t payload_reads = 0;
  std::string termination;

  friend bool operator==(const EvidenceRecord&, const EvidenceRecord&) = default;
};

// One scanned buffer as it appears in a report. Only chains that produced a
// GetPC event are listed individually; the rest appear in the termination
// histogram.
struct BufferRecord {
  std::string id;
  std::string source;
  std::uint64_t stream_offset = 0;
  std::uint32_t length = 0;
  std::string verdict;
  std::optional<std::uint32_t> offset;
  std::optional<EvidenceRecord> evidence;
  std::uint32_t chains_run = 0;
  std::uint32_t skipped_offsets = 0;
  bool wall_budget_exceeded = false;
  std::map<std::string, std::uint64_t> terminations;
  std::vector<ChainRecord> getpc_chains;
  std::optional<double> elapsed_ms;  // only with --timings

  friend bool operator==(const BufferRecord&, const BufferRecord&) = default;
};

struct Aggregate {
  std::uint64_t buffers_scanned = 0;
  std::uint64_t convicted = 0;
  std::uint64_t skipped_offsets = 0;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

// The single structured document a scan or eval invocation emits. Timing
// fields are present only when requested, so that reports are reproducible
// byte for byte.
struct ReportDocument {
  int schema = kReportSchema;
  std::string tool = kToolName;
  std::string version = kToolVersion;
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<BufferRecord> buffers;
  Aggregate aggregate;
  std::optional<double> wall_time_ms;
  nlohmann::json evaluation;  // eval only; null otherwise

  friend bool operator==(const ReportDocument&, const ReportDocument&) = default;
};

BufferRecord project(const DetectionReport& report, bool timings);
Aggregate aggregate_of(const std::vector<BufferRecord>& buffers);

// Scan settings as echoed in reports. Worker count is not echoed.
nlohmann::json config_echo(const ScanConfig& config, const ChunkOptions& chunking);

void to_json(nlohmann::json& j, const GetPCRecord& r);
void from_json(const nlohmann::json& j, GetPCRecord& r);
void to_json(nlohmann::json& j, const ChainRecord& r);
void from_json(const nlohmann::json& j, ChainRecord& r);
void to_json(nlohmann::json& j, const EvidenceRecord& r);
void from_json(const nlohmann::json& j, EvidenceRecord& r);
void to_json(nlohmann::json& j, const BufferRecord& r);
void from_json(const nlohmann::json& j, BufferRecord& r);
void to_json(nlohmann::json& j, const Aggregate& r);
void from_json(const nlohmann::json& j, Aggregate& r);
void to_json(nlohmann::json& j, const ReportDocument& r);
// Throws FormatError when the document does not follow the schema.
void from_json(const nlohmann::json& j, ReportDocument& r);

std::string serialize(const ReportDocument& doc);
ReportDocument parse_report(const std::string& text);

}  // namespace nlemu::cli
