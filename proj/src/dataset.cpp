#include "cmla/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cmla/error.hpp"

namespace cmla {

const char* stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::dataset_core: return "dataset_core";
    case Stage::encoder: return "encoder";
    case Stage::cluster_engine: return "cluster_engine";
    case Stage::leakage_metrics: return "leakage_metrics";
    case Stage::synth_harness: return "synth_harness";
    case Stage::audit_report: return "audit_report";
    case Stage::audit_cli: return "audit_cli";
  }
  return "unknown";
}

const char* kind_name(ColumnKind kind) noexcept {
  return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw Error(Stage::dataset_core, message);
}

}  // namespace

std::optional<std::size_t> Column::category_index(std::string_view value) const {
  for (std::size_t i = 0; i < vocabulary.size(); ++i)
    if (vocabulary[i] == value) return i;
  return std::nullopt;
}

TableSchema::TableSchema(std::vector<Column> columns) : columns_(std::move(columns)) {}

void TableSchema::validate() const {
  if (columns_.empty()) fail("schema has no columns");
  std::unordered_set<std::string> names;
  for (const auto& col : columns_) {
    if (col.name.empty()) fail("schema column with empty name");
    if (!names.insert(col.name).second) fail("duplicate column name '" + col.name + "'");
    if (col.kind == ColumnKind::categorical) {
      if (col.vocabulary.empty())
        fail("categorical column '" + col.name + "' has an empty vocabulary");
      std::unordered_set<std::string> seen;
      for (const auto& v : col.vocabulary)
        if (!seen.insert(v).second)
          fail("categorical column '" + col.name + "' repeats category '" + v + "'");
    } else if (!col.vocabulary.empty()) {
      fail("numeric column '" + col.name + "' carries a vocabulary");
    }
  }
}

std::optional<std::size_t> TableSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

std::size_t TableSchema::numeric_count() const {
  std::size_t n = 0;
  for (const auto& c : columns_) n += c.kind == ColumnKind::numeric;
  return n;
}

DataTable::DataTable(TableSchema schema, std::vector<double> cells, Origin origin)
    : schema_(std::move(schema)), cells_(std::move(cells)), origin_(origin) {
  schema_.validate();
  const std::size_t c = schema_.size();
  if (cells_.size() % c != 0) fail("cell count is not a multiple of the column count");
  rows_ = cells_.size() / c;
  if (rows_ == 0) fail("table has no rows");
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t j = 0; j < c; ++j) {
      const double v = cells_[r * c + j];
      if (!std::isfinite(v))
        fail("non-finite cell at row " + std::to_string(r) + ", column " + schema_[j].name);
      if (schema_[j].kind == ColumnKind::categorical) {
        if (v < 0 || v != std::floor(v) || v >= static_cast<double>(schema_[j].vocabulary.size()))
          fail("category index out of range at row " + std::to_string(r) + ", column " +
               schema_[j].name);
      }
    }
  }
}

std::vector<double> DataTable::row(std::size_t r) const {
  const auto begin = cells_.begin() + static_cast<std::ptrdiff_t>(r * cols());
  return {begin, begin + static_cast<std::ptrdiff_t>(cols())};
}

std::string DataTable::cell_text(std::size_t row, std::size_t col) const {
  if (schema_[col].kind == ColumnKind::numeric) return format_double(numeric(row, col));
  return category_label(row, col);
}

DataTable DataTable::with_origin(Origin origin) const {
  DataTable copy = *this;
  copy.origin_ = origin;
  return copy;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;  // UTF-8 BOM

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };

  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) fail("stray quote inside unquoted field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) fail("unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  if (value == 0) value = 0;  // drop the sign of -0
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::optional<double> parse_finite(std::string_view text) {
  if (text.empty()) return std::nullopt;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  double value = 0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

DataTable table_from_records(const std::vector<std::vector<std::string>>& records,
                             const std::optional<TableSchema>& schema_hint,
                             Origin origin, const std::string& source) {
  if (records.empty()) fail(source + ": missing header row");
  const auto& header = records.front();
  const std::size_t ncols = header.size();

  // Skip fully blank lines (a lone empty field) between records.
  std::vector<const std::vector<std::string>*> data;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() == 1 && rec[0].empty() && ncols != 1) continue;
    if (rec.size() != ncols)
      fail(source + ": row " + std::to_string(data.size() + 1) + " has " +
           std::to_string(rec.size()) + " fields, header has " + std::to_string(ncols));
    data.push_back(&rec);
  }
  if (data.empty()) fail(source + ": table has no data rows");

  std::vector<Column> columns(ncols);
  if (schema_hint) {
    if (schema_hint->size() != ncols)
      fail(source + ": header has " + std::to_string(ncols) + " columns, schema declares " +
           std::to_string(schema_hint->size()));
    for (std::size_t j = 0; j < ncols; ++j) {
      if ((*schema_hint)[j].name != header[j])
        fail(source + ": header column " + std::to_string(j + 1) + " is '" + header[j] +
             "', schema expects '" + (*schema_hint)[j].name + "'");
      columns[j] = (*schema_hint)[j];
    }
  } else {
    for (std::size_t j = 0; j < ncols; ++j) {
      columns[j].name = header[j];
      bool numeric = false;
      for (const auto* rec : data) {
        const auto& cell = (*rec)[j];
        if (cell.empty()) continue;
        if (!parse_finite(cell)) {
          numeric = false;
          break;
        }
        numeric = true;
      }
      columns[j].kind = numeric ? ColumnKind::numeric : ColumnKind::categorical;
    }
  }

  std::vector<std::unordered_map<std::string, std::size_t>> lookup(ncols);
  for (std::size_t j = 0; j < ncols; ++j)
    for (std::size_t k = 0; k < columns[j].vocabulary.size(); ++k)
      lookup[j].emplace(columns[j].vocabulary[k], k);

  std::vector<double> cells;
  cells.reserve(data.size() * ncols);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& rec = *data[r];
    for (std::size_t j = 0; j < ncols; ++j) {
      const auto& cell = rec[j];
      if (columns[j].kind == ColumnKind::numeric) {
        auto value = parse_finite(cell);
        if (!value) {
          fail(source + ": row " + std::to_string(r + 1) + ", column " + columns[j].name +
               (cell.empty() ? ": missing numeric value"
                             : ": cannot parse '" + cell + "' as a finite number"));
        }
        cells.push_back(*value);
      } else {
        auto [it, inserted] = lookup[j].try_emplace(cell, columns[j].vocabulary.size());
        if (inserted) columns[j].vocabulary.push_back(cell);
        cells.push_back(static_cast<double>(it->second));
      }
    }
  }
  try {
    return DataTable(TableSchema(std::move(columns)), std::move(cells), origin);
  } catch (const Error& e) {
    fail(source + ": " + e.what());
  }
}

DataTable load_csv(const std::filesystem::path& path,
                   const std::optional<TableSchema>& schema_hint, Origin origin) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return table_from_records(parse_csv(text), schema_hint, origin, path.string());
}

std::string to_csv(const DataTable& table) {
  std::string out;
  const auto& schema = table.schema();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (j) out.push_back(',');
    out += csv_escape(schema[j].name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (j) out.push_back(',');
      out += csv_escape(table.cell_text(r, j));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const DataTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path.string() + "'");
  out << to_csv(table);
  if (!out) fail("write failed for '" + path.string() + "'");
}

TableSchema unify_schema(const DataTable& synthetic, const DataTable* real) {
  const auto& s = synthetic.schema();
  if (real) {
    const auto& r = real->schema();
    if (r.size() != s.size())
      fail("schema mismatch: synthetic has " + std::to_string(s.size()) +
           " columns, real has " + std::to_string(r.size()));
    for (std::size_t j = 0; j < s.size(); ++j) {
      auto idx = r.find(s[j].name);
      if (!idx) fail("schema mismatch: real table lacks column '" + s[j].name + "'");
      if (r[*idx].kind != s[j].kind)
        fail("schema mismatch: column '" + s[j].name + "' is " + kind_name(s[j].kind) +
             " in synthetic data but " + kind_name(r[*idx].kind) + " in real data");
    }
  }
  return s;
}

TableSchema kinds_only(const TableSchema& schema) {
  std::vector<Column> cols = schema.columns();
  for (auto& c : cols) c.vocabulary.clear();
  return TableSchema(std::move(cols));
}

}  // namespace cmla
