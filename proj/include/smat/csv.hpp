#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smat {

// Header + numeric columns. Cells must parse as doubles.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  // -1 when absent.
  int index_of(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;  // throws DataError
};

CsvTable read_csv(const std::string& path);  // throws DataError
CsvTable parse_csv(std::istream& in, const std::string& source);

// Fixed "%.10g"-style formatting so reruns produce byte-identical files.
std::string format_number(double x);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
// Pre-formatted cells, for tables with text columns.
void write_text_csv(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

}  // namespace smat
