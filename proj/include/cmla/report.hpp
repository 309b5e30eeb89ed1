#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmla/cluster.hpp"
#include "cmla/encoder.hpp"
#include "cmla/metrics.hpp"

namespace cmla {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

struct RunMetadata {
  std::string dataset_label = "dataset";
  std::string generator_label = "generator";
  ScaleMode scale = ScaleMode::minmax;
  Metric metric = Metric::euclidean;
  std::size_t pca_dims = 0;  // 0 when PCA is off
  DbscanParams dbscan;       // eps resolved
  std::uint64_t seed = 0;
  std::string synthetic_path;
  std::string real_path;     // empty for synthetic-only runs
  std::string model_hash;
  std::string tool_version = kToolVersion;
};

struct ReferenceReadout {
  double tau = 0;
  double asr = 0;
  double coverage = 0;
};

struct MedoidEntry {
  std::size_t cluster = 0;
  std::size_t row_id = 0;
  std::size_t size = 0;
};

struct Evaluation {
  std::size_t real_rows = 0;
  DminSummary summary;
  MetricCurves curves;
  std::vector<ReferenceReadout> reference;
  std::vector<DistanceRecord> records;
};

struct LeakageReport {
  RunMetadata run;
  Json config = Json::object();
  std::size_t synthetic_rows = 0;
  std::size_t noise_rows = 0;
  std::vector<MedoidEntry> medoids;
  std::optional<Evaluation> evaluation;
  /// Whether per-medoid records are embedded in the JSON form.
  bool embed_records = false;

  std::size_t clusters() const noexcept { return medoids.size(); }

  Json to_json() const;
  static LeakageReport from_json(const Json& doc);
  /// Pretty JSON text with a trailing newline.
  std::string render() const;
};

struct EvaluationInputs {
  const EncodedMatrix* real_encoded = nullptr;
  std::vector<DistanceRecord> records;
  MetricCurves curves;
  ThresholdGrid grid;
};

/// Assembles a report and checks that every artifact was produced under the
/// same encoding model.
LeakageReport build_report(RunMetadata run, Json config, const EncodingModel& model,
                           const EncodedMatrix& synthetic_encoded, const ClusterLabeling& labeling,
                           const MedoidSet& medoids, const std::optional<EvaluationInputs>& evaluation,
                           bool embed_records);

/// d_min summary column order.
inline const std::vector<std::string> kSummaryColumns = {"M",      "min", "mean", "median",
                                                         "max",    "p10", "p90"};

/// "M=46, min=0.0000, mean=0.0655, ..." at 4 decimals.
std::string render_summary_row(const DminSummary& summary);
/// 4-decimal cells in summary column order (M as an integer).
std::vector<std::string> summary_cells(const DminSummary& summary);
/// Header plus one row, columns M,min,mean,median,max,p10,p90.
std::string summary_csv(const DminSummary& summary);
/// Summary layout for several runs: dataset,generator,M,...,p90.
std::string summary_table_csv(const std::vector<LeakageReport>& reports);

/// tau,asr,coverage per grid point. Throws unless tau strictly increases and
/// both rates are non-decreasing.
std::string curves_csv(const LeakageReport& report);
std::string records_csv(const std::vector<DistanceRecord>& records);
std::string labels_csv(const ClusterLabeling& labeling, const EncodedMatrix& matrix);
std::string medoids_csv(const MedoidSet& medoids, const TableSchema& schema);
Json medoids_sidecar(const MedoidSet& medoids, const ClusterLabeling& labeling);

/// Coverage at tau: rows are generator labels, columns dataset labels, in
/// first-appearance order. Absent combinations are empty cells.
std::string heatmap_csv(const std::vector<LeakageReport>& reports, double tau);
/// "heatmap_tau0.1.csv"
std::string heatmap_filename(double tau);

void write_text(const std::filesystem::path& path, const std::string& text);
void emit_curves_csv(const LeakageReport& report, const std::filesystem::path& path);
void emit_heatmap_cell(const std::vector<LeakageReport>& reports, double tau,
                       const std::filesystem::path& path);

}  // namespace cmla
