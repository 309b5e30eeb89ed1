#include "cmla/encoder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "cmla/error.hpp"

namespace cmla {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(Stage::encoder, message); }

}  // namespace

const char* scale_mode_name(ScaleMode mode) noexcept {
  return mode == ScaleMode::minmax ? "minmax" : "zscore";
}

ScaleMode parse_scale_mode(const std::string& text) {
  if (text == "minmax") return ScaleMode::minmax;
  if (text == "zscore") return ScaleMode::zscore;
  fail("unknown scale mode '" + text + "' (expected minmax or zscore)");
}

const char* metric_name(Metric metric) noexcept {
  return metric == Metric::euclidean ? "euclidean" : "gower";
}

Metric parse_metric(const std::string& text) {
  if (text == "euclidean") return Metric::euclidean;
  if (text == "gower") return Metric::gower;
  fail("unknown metric '" + text + "' (expected euclidean or gower)");
}

std::vector<double> PcaModel::project(std::span<const double> x) const {
  if (x.size() != input_dim) fail("PCA input has wrong dimensionality");
  std::vector<double> out(output_dim(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto axis = component(k);
    double acc = 0;
    for (std::size_t d = 0; d < input_dim; ++d) acc += (x[d] - mean[d]) * axis[d];
    out[k] = acc;
  }
  return out;
}

std::vector<double> PcaModel::reconstruct(std::span<const double> z) const {
  if (z.size() != output_dim()) fail("PCA code has wrong dimensionality");
  std::vector<double> out(mean);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const auto axis = component(k);
    for (std::size_t d = 0; d < input_dim; ++d) out[d] += z[k] * axis[d];
  }
  return out;
}

const NumericScaling* EncodingModel::scaling_for(std::size_t column) const {
  for (const auto& s : numerics)
    if (s.column == column) return &s;
  return nullptr;
}

Json EncodingModel::to_json() const {
  Json doc;
  doc["scale_mode"] = scale_mode_name(mode);
  Json cols = Json::array();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& c = schema[j];
    Json col;
    col["name"] = c.name;
    col["kind"] = kind_name(c.kind);
    if (c.kind == ColumnKind::categorical) {
      col["vocabulary"] = c.vocabulary;
    } else {
      const auto* s = scaling_for(j);
      col["lo"] = s->lo;
      col["hi"] = s->hi;
      col["mean"] = s->mean;
      col["stddev"] = s->stddev;
      col["offset"] = s->offset;
      col["divisor"] = s->divisor;
    }
    cols.push_back(std::move(col));
  }
  doc["columns"] = std::move(cols);
  doc["encoded_dims"] = raw_dims();
  if (pca) {
    Json p;
    p["input_dim"] = pca->input_dim;
    p["output_dim"] = pca->output_dim();
    p["mean"] = pca->mean;
    p["components"] = pca->components;
    p["eigenvalues"] = pca->eigenvalues;
    p["explained_variance_ratio"] = pca->explained_variance_ratio;
    doc["pca"] = std::move(p);
  } else {
    doc["pca"] = nullptr;
  }
  return doc;
}

EncodingModel EncodingModel::from_json(const Json& doc) {
  try {
    EncodingModel model;
    model.mode = parse_scale_mode(doc.at("scale_mode").get<std::string>());
    std::vector<Column> cols;
    for (const auto& c : doc.at("columns")) {
      Column col;
      col.name = c.at("name").get<std::string>();
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "categorical") {
        col.kind = ColumnKind::categorical;
        col.vocabulary = c.at("vocabulary").get<std::vector<std::string>>();
      } else if (kind == "numeric") {
        NumericScaling s;
        s.column = cols.size();
        s.lo = c.at("lo").get<double>();
        s.hi = c.at("hi").get<double>();
        s.mean = c.at("mean").get<double>();
        s.stddev = c.at("stddev").get<double>();
        s.offset = c.at("offset").get<double>();
        s.divisor = c.at("divisor").get<double>();
        model.numerics.push_back(s);
      } else {
        fail("unknown column kind '" + kind + "'");
      }
      cols.push_back(std::move(col));
    }
    model.schema = TableSchema(std::move(cols));
    model.schema.validate();
    for (const auto& s : model.numerics) model.dim_source.push_back(s.column);
    for (std::size_t j = 0; j < model.schema.size(); ++j)
      if (model.schema[j].kind == ColumnKind::categorical)
        model.dim_source.insert(model.dim_source.end(), model.schema[j].vocabulary.size(), j);
    if (doc.at("encoded_dims").get<std::size_t>() != model.raw_dims())
      fail("encoded_dims disagrees with the column list");
    if (!doc.at("pca").is_null()) {
      const auto& p = doc.at("pca");
      PcaModel pca;
      pca.input_dim = p.at("input_dim").get<std::size_t>();
      pca.mean = p.at("mean").get<std::vector<double>>();
      pca.components = p.at("components").get<std::vector<double>>();
      pca.eigenvalues = p.at("eigenvalues").get<std::vector<double>>();
      pca.explained_variance_ratio = p.at("explained_variance_ratio").get<std::vector<double>>();
      if (pca.input_dim != model.raw_dims() || pca.mean.size() != pca.input_dim ||
          pca.components.size() != pca.input_dim * pca.output_dim() ||
          pca.explained_variance_ratio.size() != pca.output_dim())
        fail("inconsistent PCA block");
      model.pca = std::move(pca);
    }
    return model;
  } catch (const Json::exception& e) {
    fail(std::string("malformed encoding model: ") + e.what());
  }
}

std::string EncodingModel::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double DistanceSpace::operator()(const double* a, const double* b, std::size_t dims) const {
  if (metric == Metric::euclidean) {
    double acc = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double diff = a[d] - b[d];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }
  double acc = 0;
  for (std::size_t d = 0; d < dims; ++d) {
    if (categorical[d]) {
      acc += a[d] == b[d] ? 0.0 : 1.0;
    } else if (ranges[d] > 0) {
      acc += std::min(1.0, std::abs(a[d] - b[d]) / ranges[d]);
    }
  }
  return acc / static_cast<double>(dims);
}

EncodingModel fit_encoding(const DataTable& synthetic, ScaleMode mode) {
  EncodingModel model;
  model.schema = unify_schema(synthetic);
  model.mode = mode;
  const auto& schema = model.schema;
  const std::size_t n = synthetic.rows();

  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].kind != ColumnKind::numeric) continue;
    NumericScaling s;
    s.column = j;
    s.lo = s.hi = synthetic.numeric(0, j);
    double sum = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = synthetic.numeric(r, j);
      s.lo = std::min(s.lo, v);
      s.hi = std::max(s.hi, v);
      sum += v;
    }
    s.mean = sum / static_cast<double>(n);
    double ss = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dv = synthetic.numeric(r, j) - s.mean;
      ss += dv * dv;
    }
    s.stddev = std::sqrt(ss / static_cast<double>(n));
    if (mode == ScaleMode::minmax) {
      s.offset = s.lo;
      s.divisor = s.hi > s.lo ? s.hi - s.lo : 1.0;
    } else {
      s.offset = s.mean;
      s.divisor = s.stddev > 0 ? s.stddev : 1.0;
    }
    model.numerics.push_back(s);
    model.dim_source.push_back(j);
  }
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (schema[j].kind == ColumnKind::categorical)
      model.dim_source.insert(model.dim_source.end(), schema[j].vocabulary.size(), j);
  if (model.dim_source.empty()) fail("encoding has zero dimensions");
  return model;
}

namespace {

// Maps each model column to the table column of the same name and kind, and
// each table category to the model vocabulary index (nullopt when unknown).
struct ColumnBinding {
  std::vector<std::size_t> table_column;
  std::vector<std::vector<std::optional<std::size_t>>> category_map;
};

ColumnBinding bind(const EncodingModel& model, const DataTable& table) {
  const auto& ms = model.schema;
  const auto& ts = table.schema();
  if (ms.size() != ts.size())
    fail("schema mismatch: model has " + std::to_string(ms.size()) + " columns, table has " +
         std::to_string(ts.size()));
  ColumnBinding b;
  b.table_column.resize(ms.size());
  b.category_map.resize(ms.size());
  for (std::size_t j = 0; j < ms.size(); ++j) {
    auto idx = ts.find(ms[j].name);
    if (!idx) fail("schema mismatch: table lacks column '" + ms[j].name + "'");
    if (ts[*idx].kind != ms[j].kind)
      fail("schema mismatch: column '" + ms[j].name + "' has kind " + kind_name(ts[*idx].kind) +
           ", model expects " + kind_name(ms[j].kind));
    b.table_column[j] = *idx;
    if (ms[j].kind == ColumnKind::categorical) {
      for (const auto& label : ts[*idx].vocabulary)
        b.category_map[j].push_back(ms[j].category_index(label));
    }
  }
  return b;
}

}  // namespace

EncodedMatrix encode(const EncodingModel& model, const DataTable& table, Metric metric) {
  const auto binding = bind(model, table);
  const auto& schema = model.schema;
  EncodedMatrix out;
  out.rows = table.rows();
  out.row_ids.resize(out.rows);
  std::iota(out.row_ids.begin(), out.row_ids.end(), std::size_t{0});
  out.model_hash = model.hash();
  out.space.metric = metric;

  if (metric == Metric::gower) {
    if (model.pca) fail("PCA projection cannot be combined with the Gower metric");
    out.dims = schema.size();
    out.space.categorical.resize(out.dims);
    out.space.ranges.assign(out.dims, 0.0);
    for (std::size_t j = 0; j < schema.size(); ++j) {
      out.space.categorical[j] = schema[j].kind == ColumnKind::categorical;
      if (const auto* s = model.scaling_for(j)) out.space.ranges[j] = s->hi - s->lo;
    }
    out.values.resize(out.rows * out.dims);
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const std::size_t tj = binding.table_column[j];
      if (schema[j].kind == ColumnKind::numeric) {
        for (std::size_t r = 0; r < out.rows; ++r)
          out.values[r * out.dims + j] = table.numeric(r, tj);
        continue;
      }
      // Unknown categories get distinct negative codes.
      const auto& map = binding.category_map[j];
      std::vector<double> code(map.size());
      double next_unknown = -1;
      for (std::size_t k = 0; k < map.size(); ++k)
        code[k] = map[k] ? static_cast<double>(*map[k]) : next_unknown--;
      for (std::size_t r = 0; r < out.rows; ++r)
        out.values[r * out.dims + j] = code[table.category(r, tj)];
    }
    return out;
  }

  const std::size_t raw = model.raw_dims();
  std::vector<double> encoded(out.rows * raw, 0.0);
  std::size_t base = 0;
  for (const auto& s : model.numerics) {
    const std::size_t tj = binding.table_column[s.column];
    for (std::size_t r = 0; r < out.rows; ++r)
      encoded[r * raw + base] = s.apply(table.numeric(r, tj));
    ++base;
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].kind != ColumnKind::categorical) continue;
    const std::size_t tj = binding.table_column[j];
    const auto& map = binding.category_map[j];
    for (std::size_t r = 0; r < out.rows; ++r)
      if (const auto& k = map[table.category(r, tj)]) encoded[r * raw + base + *k] = 1.0;
    base += schema[j].vocabulary.size();
  }

  if (!model.pca) {
    out.dims = raw;
    out.values = std::move(encoded);
    return out;
  }
  out.dims = model.pca->output_dim();
  out.values.resize(out.rows * out.dims);
  for (std::size_t r = 0; r < out.rows; ++r) {
    const auto z = model.pca->project({encoded.data() + r * raw, raw});
    std::copy(z.begin(), z.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * out.dims));
  }
  return out;
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (metric != Metric::euclidean)
    fail("vector distance supports euclidean only; use gower_distance on raw rows");
  if (a.size() != b.size())
    fail("dimensionality mismatch: " + std::to_string(a.size()) + " vs " +
         std::to_string(b.size()));
  return DistanceSpace{}(a.data(), b.data(), a.size());
}

double gower_distance(std::span<const double> a, std::span<const double> b,
                      const TableSchema& schema,
                      std::span<const std::pair<double, double>> numeric_ranges) {
  const std::size_t n = schema.size();
  if (a.size() != n || b.size() != n || numeric_ranges.size() != n)
    fail("schema mismatch: Gower inputs do not match the schema width");
  double acc = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (schema[j].kind == ColumnKind::categorical) {
      acc += a[j] == b[j] ? 0.0 : 1.0;
      continue;
    }
    const double range = numeric_ranges[j].second - numeric_ranges[j].first;
    if (range > 0) acc += std::min(1.0, std::abs(a[j] - b[j]) / range);
  }
  return acc / static_cast<double>(n);
}

std::vector<std::pair<double, double>> gower_ranges(const EncodingModel& model) {
  std::vector<std::pair<double, double>> out(model.schema.size(), {0.0, 0.0});
  for (const auto& s : model.numerics) out[s.column] = {s.lo, s.hi};
  return out;
}

PcaModel fit_pca(const EncodedMatrix& matrix, std::size_t d_prime) {
  const std::size_t n = matrix.rows;
  const std::size_t dims = matrix.dims;
  if (n < 2) fail("PCA needs at least 2 rows");
  if (d_prime == 0 || d_prime > std::min(n, dims))
    fail("PCA target dimension " + std::to_string(d_prime) + " outside [1, " +
         std::to_string(std::min(n, dims)) + "]");

  PcaModel pca;
  pca.input_dim = dims;
  pca.mean.assign(dims, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t d = 0; d < dims; ++d) pca.mean[d] += matrix.values[r * dims + d];
  for (auto& m : pca.mean) m /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims),
                                              static_cast<Eigen::Index>(dims));
  std::vector<double> centered(dims);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t d = 0; d < dims; ++d) centered[d] = matrix.values[r * dims + d] - pca.mean[d];
    for (std::size_t a = 0; a < dims; ++a)
      for (std::size_t b = a; b < dims; ++b)
        cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += centered[a] * centered[b];
  }
  for (std::size_t a = 0; a < dims; ++a)
    for (std::size_t b = a; b < dims; ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      cov(ia, ib) /= static_cast<double>(n - 1);
      cov(ib, ia) = cov(ia, ib);
    }

  const double total = cov.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail("covariance eigendecomposition failed");
  const auto& values = solver.eigenvalues();   // ascending
  const auto& vectors = solver.eigenvectors();

  pca.components.resize(d_prime * dims);
  for (std::size_t k = 0; k < d_prime; ++k) {
    const auto col = static_cast<Eigen::Index>(dims - 1 - k);
    // Sign: the largest-magnitude coordinate (first on ties) is non-negative.
    std::size_t pivot = 0;
    for (std::size_t d = 1; d < dims; ++d)
      if (std::abs(vectors(static_cast<Eigen::Index>(d), col)) >
          std::abs(vectors(static_cast<Eigen::Index>(pivot), col)))
        pivot = d;
    const double sign = vectors(static_cast<Eigen::Index>(pivot), col) < 0 ? -1.0 : 1.0;
    for (std::size_t d = 0; d < dims; ++d)
      pca.components[k * dims + d] = sign * vectors(static_cast<Eigen::Index>(d), col);
    const double lambda = std::max(0.0, values(col));
    pca.eigenvalues.push_back(lambda);
    pca.explained_variance_ratio.push_back(total > 0 ? lambda / total : 0.0);
  }
  return pca;
}

void attach_pca(EncodingModel& model, const EncodedMatrix& synthetic_raw, std::size_t d_prime) {
  if (model.pca) fail("model already carries a PCA projection");
  if (synthetic_raw.dims != model.raw_dims() || synthetic_raw.space.metric != Metric::euclidean)
    fail("PCA must be fitted on the un-projected Euclidean encoding");
  model.pca = fit_pca(synthetic_raw, d_prime);
}

}  // namespace cmla
