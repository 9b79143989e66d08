#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace frbmed {

/// Rectangular table of named columns. Missing cells hold NaN; a column that
/// contained any non-numeric text is kept but flagged, and only rejected when
/// a model actually selects it.
class DataTable {
 public:
  struct Column {
    std::string name;
    std::vector<double> values;
    bool numeric = true;
    std::string first_bad_cell;
  };

  DataTable() = default;

  /// Adds a fully numeric column. Throws on duplicate names or length mismatch.
  void add_column(std::string name, std::vector<double> values);
  void add_column(Column column);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  std::vector<std::string> names() const;

  /// nullptr when no column has that name.
  const Column* find(std::string_view name) const;

 private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

/// RFC 4180 CSV with a header row. Empty cells become missing values; number
/// parsing ignores the process locale. CRLF and LF line endings are accepted.
DataTable read_csv(const std::string& path);
DataTable parse_csv(std::string_view text);

}  // namespace frbmed
