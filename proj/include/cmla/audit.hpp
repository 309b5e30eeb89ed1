#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmla/cluster.hpp"
#include "cmla/encoder.hpp"
#include "cmla/harness.hpp"
#include "cmla/metrics.hpp"
#include "cmla/report.hpp"

namespace cmla {

struct AuditConfig {
  std::filesystem::path synthetic;
  std::optional<std::filesystem::path> real;
  std::filesystem::path out_dir = "cmla_out";
  ScaleMode scale = ScaleMode::minmax;
  /// "off", "auto" (min(D, N, 50)) or a positive integer.
  std::string pca = "off";
  DbscanParams dbscan;
  std::string grid = "0:2.5:0.01";
  std::vector<double> marks = {0.1, 0.5};
  Metric metric = Metric::euclidean;
  std::uint64_t seed = 0;
  bool records = false;
  bool verify = false;
  std::string dataset_label = "dataset";
  std::string generator_label = "generator";
  std::size_t cluster_index_threshold = 50000;
  std::size_t nearest_index_threshold = 4096;

  /// Throws on a missing synthetic path or inconsistent options.
  void validate() const;
  /// Settings as written to the report (paths excluded).
  Json settings_json() const;
  /// Overlays settings present in `doc` (config-file form) onto this config.
  void apply_json(const Json& doc);
};

/// Files of one audit, keyed by name relative to the output directory.
using OutputFiles = std::map<std::string, std::string>;

struct AuditResult {
  LeakageReport report;
  OutputFiles files;
  /// Pipeline stages in execution order.
  std::vector<std::string> trace;
};

/// Load, encode, cluster and extract medoids from the synthetic table; then,
/// only when a real table is configured, load it and compute d_min, ASR and
/// coverage. Paths in the report are stored relative to `report_dir`.
AuditResult compute_audit(const AuditConfig& config, const std::filesystem::path& report_dir);

/// compute_audit + write every file under config.out_dir (+ verify when set).
AuditResult run_audit(const AuditConfig& config);

struct VerifyResult {
  std::size_t files_checked = 0;
  std::size_t values_checked = 0;
  std::vector<std::string> mismatches;

  bool ok() const noexcept { return mismatches.empty(); }
};

/// Recomputes an audit from the inputs recorded in `report_path` and diffs
/// every emitted file in its directory at absolute/relative tolerance `tol`.
VerifyResult verify_report(const std::filesystem::path& report_path, double tol = 1e-9);

/// Compares two file bodies: numeric tokens within `tol`, text exactly.
void diff_text(const std::string& name, const std::string& expected, const std::string& actual,
               double tol, VerifyResult& out);

struct OrderingCheck {
  OrderingExpectation expectation;
  double higher_asr = 0;
  double lower_asr = 0;
  bool passed = false;
};

struct ScenarioResult {
  std::vector<LeakageReport> reports;
  std::vector<OrderingCheck> ordering;
  std::vector<std::string> heatmap_files;

  bool ordering_ok() const;
};

/// Generates the real table and one synthetic table per generator, audits
/// each under out_dir/<generator label>/, and writes heatmaps for every
/// marked tau plus a combined d_min summary table. `overrides` (config-file
/// form) are applied after the scenario's own audit settings.
ScenarioResult run_scenario(const HarnessScenario& scenario, const std::filesystem::path& out_dir,
                            const Json& overrides = Json::object());
ScenarioResult run_scenario(const std::filesystem::path& scenario_path,
                            const std::filesystem::path& out_dir,
                            const Json& overrides = Json::object());

}  // namespace cmla
