#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "doctest.h"

#include "cmla/audit.hpp"
#include "cmla/error.hpp"

using namespace cmla;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("cmla_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

HarnessScenario small_scenario() {
  std::ifstream in(std::string(CMLA_SOURCE_DIR) + "/scenarios/two_cluster.json");
  auto sc = HarnessScenario::from_json(Json::parse(in));
  sc.real.n_rows = 400;
  for (auto& g : sc.generators) g.n_samples = 400;
  return sc;
}

// Writes a memorizer-style synthetic/real pair to `dir`.
void write_pair(const fs::path& dir) {
  auto sc = small_scenario();
  const auto real = make_real(sc);
  write_csv(real, dir / "real.csv");
  write_csv(sample_synthetic(real, sc.generators[1]), dir / "synth.csv");
}

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(CMLA_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("synthetic-only audit has no evaluation") {
  const auto dir = scratch("synth_only");
  write_pair(dir);
  AuditConfig cfg;
  cfg.synthetic = dir / "synth.csv";
  cfg.out_dir = dir / "out";
  const auto res = run_audit(cfg);
  CHECK(!res.report.evaluation);
  CHECK(res.report.clusters() > 0);
  CHECK(std::find(res.trace.begin(), res.trace.end(), "load_real") == res.trace.end());
  CHECK(Json::parse(slurp(dir / "out/report.json"))["evaluation"].is_null());
  CHECK(!fs::exists(dir / "out/curves.csv"));
  CHECK(fs::exists(dir / "out/medoids.csv"));
  CHECK(verify_report(dir / "out/report.json").ok());
}

TEST_CASE("real data is read only after medoids exist") {
  const auto dir = scratch("trace");
  write_pair(dir);
  AuditConfig cfg;
  cfg.synthetic = dir / "synth.csv";
  cfg.real = dir / "real.csv";
  cfg.out_dir = dir / "out";
  const auto res = run_audit(cfg);
  const auto& t = res.trace;
  const auto medoids = std::find(t.begin(), t.end(), "medoids");
  const auto load_real = std::find(t.begin(), t.end(), "load_real");
  REQUIRE(medoids != t.end());
  REQUIRE(load_real != t.end());
  CHECK(medoids < load_real);
  CHECK(res.report.evaluation);
  for (const char* f : {"report.json", "encoding_model.json", "labels.csv", "medoids.csv", "medoids.json",
                        "curves.csv", "dmin_records.csv", "dmin_summary.csv"})
    CHECK(fs::exists(dir / "out" / f));
}

TEST_CASE("malformed input names the dataset stage") {
  const auto dir = scratch("malformed");
  std::ofstream(dir / "bad.csv") << "a,b\n1,2\n3\n";
  AuditConfig cfg;
  cfg.synthetic = dir / "bad.csv";
  cfg.out_dir = dir / "out";
  try {
    run_audit(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.stage() == Stage::dataset_core);
  }
}

TEST_CASE("verify passes and catches tampering") {
  const auto dir = scratch("verify");
  write_pair(dir);
  AuditConfig cfg;
  cfg.synthetic = dir / "synth.csv";
  cfg.real = dir / "real.csv";
  cfg.out_dir = dir / "out";
  cfg.records = true;
  run_audit(cfg);
  const auto first = verify_report(dir / "out/report.json");
  CHECK(first.ok());
  CHECK(first.files_checked == 8);
  CHECK(first.values_checked > 500);

  // nudge one curve value above tolerance
  auto text = slurp(dir / "out/curves.csv");
  const auto pos = text.find("\n0.1,");
  REQUIRE(pos != std::string::npos);
  const auto end = text.find('\n', pos + 1);
  text.replace(pos + 1, end - pos - 1, "0.1,0.5,0.5");
  std::ofstream(dir / "out/curves.csv", std::ios::binary) << text;
  const auto second = verify_report(dir / "out/report.json");
  CHECK(!second.ok());

  // a missing emitted file is reported as well
  fs::remove(dir / "out/dmin_summary.csv");
  CHECK(verify_report(dir / "out/report.json").mismatches.size() >= 2);
}

TEST_CASE("diff_text tolerance") {
  VerifyResult r;
  diff_text("f", "a,1.0\n", "a,1.0000000000001\n", 1e-9, r);
  CHECK(r.ok());
  diff_text("f", "a,1.0\n", "a,1.001\n", 1e-9, r);
  CHECK(r.mismatches.size() == 1);
  diff_text("f", "a,1.0\n", "b,1.0\n", 1e-9, r);
  CHECK(r.mismatches.size() == 2);
}

TEST_CASE("scenario run shape and determinism") {
  const auto sc = small_scenario();
  const auto a = scratch("scenario_a"), b = scratch("scenario_b");
  const auto ra = run_scenario(sc, a);
  run_scenario(sc, b);
  CHECK(ra.reports.size() == 3);
  CHECK(ra.heatmap_files == std::vector<std::string>{"heatmap_tau0.1.csv", "heatmap_tau0.5.csv"});
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / rel), rel.string());
    ++compared;
  }
  CHECK(compared > 20);
  for (const auto& r : ra.reports) CHECK(verify_report(a / r.run.generator_label / "report.json").ok());
  // memorizer: every medoid is a verbatim real row
  CHECK(ra.reports[0].evaluation->reference[0].asr == 1.0);
}

TEST_CASE("violated ordering is reported") {
  auto sc = small_scenario();
  sc.expected_ordering = {{"independent", "memorizer", 0.0, 0.1}};
  const auto res = run_scenario(sc, scratch("ordering"));
  REQUIRE(res.ordering.size() == 1);
  CHECK(!res.ordering[0].passed);
  CHECK(!res.ordering_ok());
}

TEST_CASE("bad generator labels are rejected") {
  auto sc = small_scenario();
  sc.generators[1].label = "../x";
  CHECK_THROWS_AS(run_scenario(sc, scratch("labels")), Error);
  sc.generators[1].label = "memorizer";
  CHECK_THROWS_AS(run_scenario(sc, scratch("labels")), Error);
}

TEST_CASE("gower and pca configurations") {
  const auto dir = scratch("variants");
  write_pair(dir);
  AuditConfig cfg;
  cfg.synthetic = dir / "synth.csv";
  cfg.real = dir / "real.csv";
  cfg.metric = Metric::gower;
  cfg.out_dir = dir / "gower";
  CHECK(run_audit(cfg).report.run.metric == Metric::gower);
  CHECK(verify_report(dir / "gower/report.json").ok());
  cfg.pca = "2";
  CHECK_THROWS_AS(run_audit(cfg), Error);
  cfg.metric = Metric::euclidean;
  cfg.out_dir = dir / "pca";
  CHECK(run_audit(cfg).report.run.pca_dims == 2);
  CHECK(verify_report(dir / "pca/report.json").ok());
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  write_pair(dir);
  std::ofstream(dir / "bad.csv") << "a,b\n1,\"2\n";
  const auto err = dir / "stderr.txt";

  CHECK(run_cli("audit --synthetic " + (dir / "bad.csv").string() + " --out " + (dir / "o1").string(), err) == 2);
  CHECK(slurp(err).find("dataset_core") != std::string::npos);

  CHECK(run_cli("audit --synthetic " + (dir / "synth.csv").string() + " --real " + (dir / "real.csv").string() +
                    " --out " + (dir / "o2").string() + " --verify",
                err) == 0);
  CHECK(run_cli("verify " + (dir / "o2/report.json").string(), err) == 0);
  std::ofstream(dir / "o2/dmin_summary.csv") << "M,min,mean,median,max,p10,p90\n1,9,9,9,9,9,9\n";
  CHECK(run_cli("verify " + (dir / "o2/report.json").string(), err) == 4);

  CHECK(run_cli("audit --synthetic " + (dir / "synth.csv").string() + " --min-samples 1 --out " +
                    (dir / "o3").string(),
                err) == 2);
  CHECK(slurp(err).find("cluster_engine") != std::string::npos);

  auto sc = small_scenario();
  sc.expected_ordering = {{"independent", "memorizer", 0.0, 0.1}};
  std::ofstream(dir / "sc.json") << sc.to_json().dump(2);
  CHECK(run_cli("scenario " + (dir / "sc.json").string() + " --out " + (dir / "o4").string(), err) == 3);
}
