#include "scar/csv.hpp"

#include <cstdio>

#include "scar/errors.hpp"

namespace scar {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw ParseError("cannot open CSV for writing: " + path);
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ",";
    out_ << header[i];
  }
  out_ << "\n";
}

void CsvWriter::begin_row() {
  in_row_ = true;
  written_ = 0;
}

void CsvWriter::field(const std::string& v) {
  if (!in_row_) throw ParseError("CSV field outside a row");
  if (written_) out_ << ",";
  out_ << v;
  ++written_;
}

void CsvWriter::field(long v) { field(std::to_string(v)); }

void CsvWriter::field(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  field(std::string(buf));
}

void CsvWriter::field(std::optional<double> v) {
  if (v.has_value())
    field(*v);
  else
    field(std::string());
}

void CsvWriter::end_row() {
  if (written_ != columns_)
    throw ParseError("CSV row has " + std::to_string(written_) + " fields, expected " +
                     std::to_string(columns_));
  out_ << "\n";
  in_row_ = false;
}

std::optional<size_t> CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::string CsvTable::at(size_t row, const std::string& name) const {
  const auto col = column(name);
  if (!col) throw ParseError("CSV has no column '" + name + "'");
  return rows.at(row).at(*col);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty CSV");
  table.header = split_line(line);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size())
      throw ParseError(path + ": line " + std::to_string(lineno) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  return table;
}

}  // namespace scar
