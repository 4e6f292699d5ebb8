#pragma once

#include <istream>
#include <string>
#include <vector>

namespace selab {

// RFC-4180-ish table: header row required, quoted fields with doubled
// quotes, tolerant of CRLF line endings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

}  // namespace selab
