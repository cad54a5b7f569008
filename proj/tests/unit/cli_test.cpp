#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "nlemu/cli/commands.hpp"
#include "nlemu/cli/report.hpp"
#include "nlemu/corpus/shellcode.hpp"
#include "nlemu/corpus/variants.hpp"
#include "nlemu/error.hpp"

namespace nlemu::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string s;
  for (std::uint8_t b : bytes) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
    s.push_back(' ');
  }
  return s;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("nlemu_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_file(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, ScanHexCallRelSampleConvicts) {
  const CorpusSample s = generate_variant("xor_call_rel", 4);
  const fs::path p = write_file("s.hex", to_hex(s.bytes));
  const Result r = run({"scan", "--format", "hex", "--profile", "baseline", p.string()});
  EXPECT_EQ(r.code, kExitShellcode) << r.err;
  EXPECT_NE(r.out.find("shellcode"), std::string::npos);
}

TEST_F(CliTest, EmptyInputIsUsageError) {
  const fs::path p = write_file("empty.bin", "");
  const Result r = run({"scan", p.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("empty input"), std::string::npos);
}

TEST_F(CliTest, PushedStubIndirectCallNeedsExtendedProfile) {
  // The pushed-stub indirect call followed by a short byte-wise read loop over the
  // buffer: mov ecx, 16; l: mov al, [esi+ecx]; loop l; hlt.
  std::vector<std::uint8_t> code = {0x68, 0x5E, 0x56, 0x90, 0xC3, 0xFF, 0xD4,
                                    0xB9, 0x10, 0x00, 0x00, 0x00, 0x8A, 0x04,
                                    0x0E, 0xE2, 0xFB, 0xF4};
  code.resize(64, 0x41);
  const fs::path p = write_file("pushed_stub.bin", std::string(code.begin(), code.end()));
  EXPECT_EQ(run({"scan", "--profile", "extended", p.string()}).code, kExitShellcode);
  EXPECT_EQ(run({"scan", "--profile", "baseline", p.string()}).code, kExitBenign);
}

TEST_F(CliTest, BenignInputExitsZero) {
  const fs::path p = write_file("text.txt", "GET /index.html HTTP/1.1\r\nHost: example.org\r\n\r\n");
  EXPECT_EQ(run({"scan", p.string()}).code, kExitBenign);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"scan", "--threshold", "0", "x"}).code, kExitUsage);
  EXPECT_EQ(run({"scan", "--profile", "turbo", "x"}).code, kExitUsage);
  EXPECT_EQ(run({"scan", (dir_ / "missing.bin").string()}).code, kExitUsage);
  const fs::path odd = write_file("odd.hex", "9");
  EXPECT_EQ(run({"scan", "--format", "hex", odd.string()}).code, kExitUsage);
  EXPECT_EQ(run({"scan", "--chunk-max", "10", "--overlap", "10", odd.string()}).code, kExitUsage);
  EXPECT_EQ(run({"--version"}).code, kExitBenign);
}

TEST_F(CliTest, GenWritesCountSamplesDeterministically) {
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  const Result ra = run({"gen", "--variant", "xor_call_rel", "--count", "3", "--seed", "9",
                         "--out", a.string()});
  const Result rb = run({"gen", "--variant", "xor_call_rel", "--count", "3", "--seed", "9",
                         "--out", b.string()});
  ASSERT_EQ(ra.code, kExitBenign) << ra.err;
  ASSERT_EQ(rb.code, kExitBenign);
  EXPECT_EQ(ra.out, rb.out);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 6u);
  EXPECT_TRUE(fs::exists(a / "xor_call_rel_0002.bin"));
  EXPECT_TRUE(fs::exists(a / "xor_call_rel_0002.json"));
}

TEST_F(CliTest, GenUnknownVariantAndUnwritableDir) {
  EXPECT_EQ(run({"gen", "--variant", "nope", "--out", dir_.string()}).code, kExitUsage);
  const fs::path file = write_file("plain", "x");
  EXPECT_EQ(run({"gen", "--variant", "xor_fstenv", "--out", (file / "sub").string()}).code,
            kExitUsage);
  EXPECT_EQ(run({"gen", "--variant", "evasion_time_exhaust", "--nul-free", "--out",
                 dir_.string()})
                .code,
            kExitUsage);
}

TEST_F(CliTest, EvalEmptyDirAndMalformedSidecar) {
  const fs::path empty = dir_ / "empty";
  fs::create_directories(empty);
  EXPECT_EQ(run({"eval", empty.string(), "--background", "0"}).code, kExitUsage);

  const fs::path bad = dir_ / "bad";
  ASSERT_EQ(run({"gen", "--variant", "xor_fstenv", "--out", bad.string()}).code, kExitBenign);
  std::ofstream(bad / "xor_fstenv_0000.json", std::ios::trunc) << "{\"schema\": 1}";
  EXPECT_EQ(run({"eval", bad.string(), "--background", "0"}).code, kExitUsage);
}

TEST_F(CliTest, EvalMatchesExpectationsAndDetectsContradiction) {
  const fs::path corpus = dir_ / "corpus";
  ASSERT_EQ(run({"gen", "--variant", "all", "--count", "1", "--out", corpus.string()}).code,
            kExitBenign);
  const Result ok = run({"eval", corpus.string(), "--background", "4096"});
  EXPECT_EQ(ok.code, kExitBenign) << ok.out << ok.err;
  EXPECT_NE(ok.out.find("all verdicts match"), std::string::npos);

  // A benign-labelled sample that the baseline profile convicts.
  CorpusSample s = generate_variant("xor_call_rel", 1);
  s.expected_baseline_verdict = Label::benign;
  write_sample(corpus, "zz_mislabelled", s);
  EXPECT_EQ(run({"eval", corpus.string(), "--background", "0", "--profile", "baseline"}).code,
            kExitContradiction);
}

TEST_F(CliTest, JsonReportParsesAndAggregatesAdd) {
  const CorpusSample s = generate_variant("xor_fstenv", 2, {64, 0.25, false, 5000});
  const fs::path p = write_file("s.bin", std::string(s.bytes.begin(), s.bytes.end()));
  const fs::path json = dir_ / "r.json";
  ASSERT_EQ(run({"scan", "--chunk-max", "4096", "--overlap", "1024", "--json", json.string(),
                 p.string()})
                .code,
            kExitShellcode);
  const ReportDocument doc = parse_report(slurp(json));
  EXPECT_EQ(doc.schema, kReportSchema);
  EXPECT_EQ(doc.command, "scan");
  EXPECT_EQ(doc.aggregate, aggregate_of(doc.buffers));
  EXPECT_EQ(doc.aggregate.buffers_scanned, doc.buffers.size());
  EXPECT_GE(doc.aggregate.convicted, 1u);
  EXPECT_FALSE(doc.wall_time_ms);
  EXPECT_EQ(serialize(parse_report(serialize(doc))), serialize(doc));
  EXPECT_EQ(parse_report(serialize(doc)), doc);
}

TEST_F(CliTest, JsonToStdoutIsTheOnlyOutput) {
  const fs::path p = write_file("n.bin", std::string(200, '\x90'));
  const Result r = run({"scan", "--json", "-", "--timings", p.string()});
  EXPECT_EQ(r.code, kExitBenign);
  const ReportDocument doc = parse_report(r.out);
  EXPECT_TRUE(doc.wall_time_ms);
  ASSERT_EQ(doc.buffers.size(), 1u);
  EXPECT_TRUE(doc.buffers[0].elapsed_ms);
  EXPECT_EQ(parse_report(serialize(doc)), doc);
}

TEST_F(CliTest, ReportRejectsBadDocuments) {
  EXPECT_THROW(parse_report("not json"), FormatError);
  EXPECT_THROW(parse_report("{\"schema\": 2}"), FormatError);
  EXPECT_THROW(parse_report("{\"schema\": 1, \"tool\": \"nlemu\"}"), FormatError);
}

TEST_F(CliTest, ExitCodeIndependentOfJobs) {
  const CorpusSample s = generate_variant("xor_call_rel", 8, {64, 0.25, false, 3000});
  const fs::path p = write_file("s.bin", std::string(s.bytes.begin(), s.bytes.end()));
  const Result one = run({"scan", "--jobs", "1", "--json", "-", p.string()});
  const Result four = run({"scan", "--jobs", "4", "--json", "-", p.string()});
  EXPECT_EQ(one.code, four.code);
  EXPECT_EQ(one.out, four.out);
}

}  // namespace
}  // namespace nlemu::cli
