#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cmla {

enum class ColumnKind { numeric, categorical };

const char* kind_name(ColumnKind kind) noexcept;

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  /// Ordered category strings; empty for numeric columns.
  std::vector<std::string> vocabulary;

  /// Index of `value` in the vocabulary, if present.
  std::optional<std::size_t> category_index(std::string_view value) const;

  bool operator==(const Column&) const = default;
};

/// Ordered list of typed columns shared by every table compared under it.
class TableSchema {
 public:
  TableSchema() = default;
  explicit TableSchema(std::vector<Column> columns);

  /// Throws if names are empty or duplicated, or a categorical vocabulary is
  /// empty or has duplicates.
  void validate() const;

  std::size_t size() const noexcept { return columns_.size(); }
  const Column& operator[](std::size_t i) const { return columns_[i]; }
  Column& operator[](std::size_t i) { return columns_[i]; }
  const std::vector<Column>& columns() const noexcept { return columns_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t numeric_count() const;

  bool operator==(const TableSchema&) const = default;

 private:
  std::vector<Column> columns_;
};

enum class Origin { real, synthetic, harness };

/// Immutable row-major table. Numeric cells hold finite reals; categorical
/// cells hold the vocabulary index of the category (stored as a double).
class DataTable {
 public:
  DataTable(TableSchema schema, std::vector<double> cells, Origin origin);

  const TableSchema& schema() const noexcept { return schema_; }
  Origin origin() const noexcept { return origin_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return schema_.size(); }

  double numeric(std::size_t row, std::size_t col) const {
    return cells_[row * cols() + col];
  }
  std::size_t category(std::size_t row, std::size_t col) const {
    return static_cast<std::size_t>(cells_[row * cols() + col]);
  }
  const std::string& category_label(std::size_t row, std::size_t col) const {
    return schema_[col].vocabulary[category(row, col)];
  }
  /// Raw cell values of one row (numeric value or category index).
  std::vector<double> row(std::size_t r) const;
  const std::vector<double>& cells() const noexcept { return cells_; }

  /// Row ids are the 0-based data-line order of the source file.
  std::size_t row_id(std::size_t r) const noexcept { return r; }

  /// Text form of a cell as it would be written to CSV.
  std::string cell_text(std::size_t row, std::size_t col) const;

  /// Same rows with a new origin tag.
  DataTable with_origin(Origin origin) const;

 private:
  TableSchema schema_;
  std::vector<double> cells_;
  std::size_t rows_ = 0;
  Origin origin_;
};

/// Parses one RFC-4180 CSV document into records of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Quotes a field when it contains a delimiter, quote, or line break.
std::string csv_escape(std::string_view field);

/// Shortest decimal text that reads back to exactly `value`.
std::string format_double(double value);

/// Strict finite decimal parse (whole string consumed).
std::optional<double> parse_finite(std::string_view text);

/// Builds a table from parsed records (first record is the header).
/// `source` names the input in error messages.
DataTable table_from_records(const std::vector<std::vector<std::string>>& records,
                             const std::optional<TableSchema>& schema_hint,
                             Origin origin, const std::string& source);

/// Loads a CSV file. Without a hint, a column is numeric iff every non-empty
/// cell parses as a finite decimal; otherwise categorical with vocabulary in
/// first-appearance order. With a hint, declared kinds win and any hint
/// vocabulary is kept as a prefix; unseen categories are appended.
DataTable load_csv(const std::filesystem::path& path,
                   const std::optional<TableSchema>& schema_hint = std::nullopt,
                   Origin origin = Origin::synthetic);

std::string to_csv(const DataTable& table);
void write_csv(const DataTable& table, const std::filesystem::path& path);

/// Shared schema for a synthetic table and optional real table. Vocabularies
/// come from the synthetic table only; order follows the synthetic table.
TableSchema unify_schema(const DataTable& synthetic,
                         const DataTable* real = nullptr);

/// Kinds-only view of a schema (vocabularies cleared), usable as a hint.
TableSchema kinds_only(const TableSchema& schema);

}  // namespace cmla
