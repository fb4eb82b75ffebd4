#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "unirep/metrics.hpp"

using namespace unirep;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

ExperimentConfig sample_config() {
  ExperimentConfig cfg;
  cfg.name = "t4-bn-dd";
  DomainConfig d;
  d.synth.name = "synth-a";
  cfg.domains = {d, d};
  return cfg;
}

MetricsRecord sample_record(std::size_t step) {
  MetricsRecord rec;
  rec.step = step;
  rec.lr = 0.1;
  rec.train_loss = {1.25, 0.75};
  rec.val_error = {20.0, 30.0};
  rec.mean_error = 25.0;
  rec.wall_clock_sec = 123.0;  // must not appear in the serialized record
  return rec;
}

}  // namespace

TEST_CASE("metrics lines are deterministic and omit wall-clock timing") {
  const MetricsRecord rec = sample_record(100);
  const std::string line = metrics_record_line(rec);
  CHECK(line == metrics_record_line(rec));
  CHECK(line.find("wall") == std::string::npos);
  CHECK(line.find("123") == std::string::npos);
}

TEST_CASE("metrics file round trip") {
  TempFile f("metrics_roundtrip.jsonl");
  {
    std::ofstream out(f.path);
    out << metrics_header_line(sample_config()) << "\n";
    out << metrics_record_line(sample_record(100)) << "\n";
    out << metrics_record_line(sample_record(200)) << "\n";
  }
  const MetricsFileData data = read_metrics_file(f.path);
  CHECK(data.run_name == "t4-bn-dd");
  CHECK(data.norm_label == "bn(domain,domain)");
  CHECK(data.domain_names.size() == 2);
  REQUIRE(data.records.size() == 2);
  CHECK(data.records[0].step == 100);
  CHECK(data.records[1].step == 200);
  CHECK(data.records[1].val_error == std::vector<double>{20.0, 30.0});
  CHECK(data.records[1].mean_error == 25.0);
}

TEST_CASE("a crashed run's partial trailing line is tolerated") {
  TempFile f("metrics_crash.jsonl");
  {
    std::ofstream out(f.path);
    out << metrics_header_line(sample_config()) << "\n";
    out << metrics_record_line(sample_record(100)) << "\n";
    out << "{\"record\":\"metrics\",\"step\":200,\"lr\"";  // crash mid-write
  }
  const MetricsFileData data = read_metrics_file(f.path);
  REQUIRE(data.records.size() == 1);
  CHECK(data.records[0].step == 100);
}

TEST_CASE("report table lists one row per run with a mean column") {
  MetricsFileData a;
  a.run_name = "run-a";
  a.norm_label = "bn(domain,domain)";
  a.records = {sample_record(100)};
  MetricsFileData b;
  b.run_name = "run-b";
  b.norm_label = "in(universal)";
  b.records = {sample_record(100)};
  b.records[0].val_error = {40.0, 50.0};
  b.records[0].mean_error = 45.0;
  const std::string table = format_report({a, b});
  CHECK(table.find("bn(domain,domain)") != std::string::npos);
  CHECK(table.find("in(universal)") != std::string::npos);
  CHECK(table.find("mean") != std::string::npos);
  CHECK(table.find("25.00") != std::string::npos);
  CHECK(table.find("45.00") != std::string::npos);
}
