#include "selab/csv.hpp"

#include <fstream>

#include "selab/util.hpp"

namespace selab {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any_field = false;
  char c;

  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    any_field = true;
  };
  auto end_row = [&] {
    if (!any_field && field.empty() && row.empty()) return;  // skip blank line
    end_field();
    if (table.header.empty()) {
      table.header = row;
    } else {
      if (row.size() != table.header.size()) {
        throw ValidationError("csv: row " + std::to_string(table.rows.size() + 2) + " has " +
                              std::to_string(row.size()) + " fields, header has " +
                              std::to_string(table.header.size()));
      }
      table.rows.push_back(row);
    }
    row.clear();
    any_field = false;
  };

  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
    }
  }
  if (quoted) throw ValidationError("csv: unterminated quoted field");
  if (any_field || !field.empty()) end_row();
  if (table.header.empty()) throw ValidationError("csv: missing header row");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open csv file: " + path);
  return read_csv(in);
}

}  // namespace selab
