#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace scar {

// Minimal CSV writer with a fixed header. Numeric formatting is fixed so
// identical runs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void begin_row();
  void field(const std::string& v);
  void field(long v);
  void field(double v);                       // "%.6f"
  void field(std::optional<double> v);        // empty cell when absent
  void end_row();

 private:
  std::ofstream out_;
  size_t columns_;
  size_t written_ = 0;
  bool in_row_ = false;
};

// Header-keyed CSV reader: consumers address columns by name, never by
// position.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<size_t> column(const std::string& name) const;
  // Value at (row, named column); throws ParseError on a missing column.
  std::string at(size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace scar
