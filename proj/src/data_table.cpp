#include "frbmed/data_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "frbmed/error.hpp"

namespace frbmed {

void DataTable::add_column(std::string name, std::vector<double> values) {
  Column c;
  c.name = std::move(name);
  c.values = std::move(values);
  add_column(std::move(c));
}

void DataTable::add_column(Column column) {
  if (find(column.name) != nullptr) {
    fail(ErrorKind::ParseError, "duplicate column name '" + column.name + "'");
  }
  if (!columns_.empty() && column.values.size() != n_rows_) {
    fail(ErrorKind::RaggedRows, "column '" + column.name + "' has " +
                                    std::to_string(column.values.size()) +
                                    " rows, expected " + std::to_string(n_rows_));
  }
  n_rows_ = column.values.size();
  columns_.push_back(std::move(column));
}

std::vector<std::string> DataTable::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

const DataTable::Column* DataTable::find(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<Record> split_records(std::string_view text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = line;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = Record{};
    current.line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started) {
          fail(ErrorKind::ParseError,
               "ParseError(row " + std::to_string(records.size()) + ", col " +
                   std::to_string(current.fields.size() + 1) +
                   "): quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        ++line;
        end_record();
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) {
    fail(ErrorKind::ParseError, "ParseError(row " + std::to_string(records.size()) +
                                    ", col " + std::to_string(current.fields.size() + 1) +
                                    "): unterminated quoted field");
  }
  if (field_started || !field.empty() || !current.fields.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell == "NA" || cell == "NaN" || cell == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

}  // namespace

DataTable parse_csv(std::string_view text) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }
  auto records = split_records(text);
  if (records.empty()) fail(ErrorKind::NoHeader, "NoHeader: input has no header row");

  const auto& header = records.front().fields;
  const std::size_t width = header.size();
  std::vector<DataTable::Column> columns(width);
  for (std::size_t j = 0; j < width; ++j) {
    columns[j].name = std::string(trim(header[j]));
    if (columns[j].name.empty()) {
      fail(ErrorKind::NoHeader, "NoHeader: header column " + std::to_string(j + 1) +
                                    " is empty");
    }
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    if (fields.size() != width) {
      fail(ErrorKind::RaggedRows, "RaggedRows: data row " + std::to_string(r) + " has " +
                                      std::to_string(fields.size()) + " fields, header has " +
                                      std::to_string(width));
    }
    for (std::size_t j = 0; j < width; ++j) {
      auto& col = columns[j];
      if (trim(fields[j]).empty()) {
        col.values.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      if (auto v = parse_number(fields[j])) {
        col.values.push_back(*v);
      } else {
        if (col.numeric) col.first_bad_cell = fields[j];
        col.numeric = false;
        col.values.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
  }

  DataTable table;
  for (auto& c : columns) table.add_column(std::move(c));
  return table;
}

DataTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "IoError: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

}  // namespace frbmed
