#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cmla/cluster.hpp"
#include "cmla/encoder.hpp"

namespace cmla {

struct DistanceRecord {
  std::size_t cluster = 0;
  std::size_t medoid_row = 0;
  double d_min = 0;
  std::size_t nearest_real_row = 0;

  bool operator==(const DistanceRecord&) const = default;
};

/// Strictly increasing, non-negative thresholds with a set of marked
/// reference values that are guaranteed to be grid points.
class ThresholdGrid {
 public:
  ThresholdGrid() = default;
  /// Marks absent from `taus` (within 1e-12) are inserted.
  ThresholdGrid(std::vector<double> taus, const std::vector<double>& marks);

  /// start, start+step, ... up to stop (inclusive within 1e-9 steps); each
  /// value is rounded to 12 decimals.
  static ThresholdGrid uniform(double start, double stop, double step,
                               const std::vector<double>& marks);
  /// Parses "start:stop:step".
  static ThresholdGrid parse(const std::string& spec, const std::vector<double>& marks);
  /// 0.00, 0.01, ..., 2.50 with marks at 0.1 and 0.5.
  static ThresholdGrid standard();

  const std::vector<double>& taus() const noexcept { return taus_; }
  const std::vector<double>& marks() const noexcept { return marks_; }
  std::size_t size() const noexcept { return taus_.size(); }
  /// Grid index within 1e-12 of tau, if any.
  std::optional<std::size_t> index_of(double tau) const;

 private:
  std::vector<double> taus_;
  std::vector<double> marks_;
};

struct MetricCurves {
  std::vector<double> taus;
  std::vector<double> asr;
  std::vector<double> coverage;
  std::size_t medoid_count = 0;
  std::size_t real_count = 0;
};

struct DminSummary {
  std::size_t count = 0;
  double min = 0;
  double mean = 0;
  double median = 0;
  double max = 0;
  double p10 = 0;
  double p90 = 0;
};

struct NearestOptions {
  /// Real-row count from which nearest-neighbor queries use a k-d tree.
  std::size_t index_threshold = 4096;
};

/// d_min of every medoid: smallest distance to any real row, lowest real row
/// on ties.
std::vector<DistanceRecord> nearest_real_distances(const MedoidSet& medoids,
                                                   const EncodedMatrix& real_encoded,
                                                   const NearestOptions& options = {});

/// ASR(tau) = fraction of medoids with d_min < tau, per grid point.
std::vector<double> asr_curve(const std::vector<DistanceRecord>& records, const ThresholdGrid& grid);

/// Distance from every real row to its closest medoid.
std::vector<double> real_to_medoid_minima(const MedoidSet& medoids,
                                          const EncodedMatrix& real_encoded);

/// Cov(tau) = fraction of real rows whose closest medoid is at distance < tau.
std::vector<double> coverage_curve(const MedoidSet& medoids, const EncodedMatrix& real_encoded,
                                   const ThresholdGrid& grid);

/// Counting sweep shared by both curves: fraction of `values` strictly below each tau.
std::vector<double> fraction_below(std::vector<double> values, const std::vector<double>& taus);

MetricCurves compute_curves(const std::vector<DistanceRecord>& records, const MedoidSet& medoids,
                            const EncodedMatrix& real_encoded, const ThresholdGrid& grid);

DminSummary summarize_dmin(const std::vector<DistanceRecord>& records);

}  // namespace cmla
