#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmla/dataset.hpp"
#include "json.hpp"

namespace cmla {

using Json = nlohmann::ordered_json;

enum class ScaleMode { minmax, zscore };
enum class Metric { euclidean, gower };

const char* scale_mode_name(ScaleMode mode) noexcept;
ScaleMode parse_scale_mode(const std::string& text);
const char* metric_name(Metric metric) noexcept;
Metric parse_metric(const std::string& text);

/// Fitted statistics of one numeric column. `offset` and `divisor` are the
/// affine map applied by the active scale mode; `lo`/`hi` also drive Gower.
struct NumericScaling {
  std::size_t column = 0;
  double lo = 0;
  double hi = 0;
  double mean = 0;
  double stddev = 0;
  double offset = 0;
  double divisor = 1;

  double apply(double value) const { return (value - offset) / divisor; }
  bool operator==(const NumericScaling&) const = default;
};

/// Principal axes of an encoded matrix. Components are stored row-major,
/// one length-`input_dim` unit vector per row, by decreasing eigenvalue.
struct PcaModel {
  std::size_t input_dim = 0;
  std::vector<double> mean;
  std::vector<double> components;
  std::vector<double> eigenvalues;
  std::vector<double> explained_variance_ratio;

  std::size_t output_dim() const noexcept { return eigenvalues.size(); }
  std::span<const double> component(std::size_t k) const {
    return {components.data() + k * input_dim, input_dim};
  }
  std::vector<double> project(std::span<const double> x) const;
  std::vector<double> reconstruct(std::span<const double> z) const;

  bool operator==(const PcaModel&) const = default;
};

/// The shared representation: scaled numerics first (schema order), then one
/// one-hot block per categorical column, optionally followed by a PCA
/// projection. Every parameter is fitted from synthetic rows only.
struct EncodingModel {
  TableSchema schema;
  ScaleMode mode = ScaleMode::minmax;
  std::vector<NumericScaling> numerics;
  /// Source column of each pre-PCA encoded dimension.
  std::vector<std::size_t> dim_source;
  std::optional<PcaModel> pca;

  std::size_t raw_dims() const noexcept { return dim_source.size(); }
  std::size_t dims() const noexcept { return pca ? pca->output_dim() : raw_dims(); }
  const NumericScaling* scaling_for(std::size_t column) const;

  Json to_json() const;
  static EncodingModel from_json(const Json& doc);
  /// FNV-1a 64 of the canonical JSON, hex encoded.
  std::string hash() const;

  bool operator==(const EncodingModel&) const = default;
};

/// Distance configuration carried by an encoded matrix. Euclidean uses the
/// one-hot/scaled coordinates; Gower keeps raw numerics and category codes
/// in schema order together with the fitted column ranges.
struct DistanceSpace {
  Metric metric = Metric::euclidean;
  std::vector<std::uint8_t> categorical;  // Gower: per-dimension kind
  std::vector<double> ranges;              // Gower: hi - lo per numeric dimension

  double operator()(const double* a, const double* b, std::size_t dims) const;
  bool operator==(const DistanceSpace&) const = default;
};

struct EncodedMatrix {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<std::size_t> row_ids;
  DistanceSpace space;
  std::string model_hash;

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dims, dims};
  }
  double distance(std::size_t i, std::size_t j) const {
    return space(values.data() + i * dims, values.data() + j * dims, dims);
  }
  double distance_to(std::size_t i, std::span<const double> v) const {
    return space(values.data() + i * dims, v.data(), dims);
  }
};

EncodingModel fit_encoding(const DataTable& synthetic, ScaleMode mode = ScaleMode::minmax);

/// Encodes rows of `table` (columns matched by name and kind). Categories
/// unknown to the model produce an all-zero one-hot block under Euclidean and
/// a code that never matches a model category under Gower.
EncodedMatrix encode(const EncodingModel& model, const DataTable& table,
                     Metric metric = Metric::euclidean);

/// L2 norm of a - b.
double distance(std::span<const double> a, std::span<const double> b,
                Metric metric = Metric::euclidean);

/// Mean per-column Gower dissimilarity of two raw rows conforming to `schema`.
/// `numeric_ranges` holds (lo, hi) for every column; categorical entries are ignored.
double gower_distance(std::span<const double> a, std::span<const double> b,
                      const TableSchema& schema,
                      std::span<const std::pair<double, double>> numeric_ranges);

/// (lo, hi) per schema column from the model's fitted numerics.
std::vector<std::pair<double, double>> gower_ranges(const EncodingModel& model);

/// Top-`d_prime` eigenvectors of the sample covariance of `matrix`.
PcaModel fit_pca(const EncodedMatrix& matrix, std::size_t d_prime);

/// Fits PCA on the encoded synthetic matrix and attaches it to the model.
void attach_pca(EncodingModel& model, const EncodedMatrix& synthetic_raw, std::size_t d_prime);

}  // namespace cmla
