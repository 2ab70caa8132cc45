#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace evoplast {

// Shortest text that round-trips the exact double value.
std::string format_double(double value);

// Plain comma-separated output, UTF-8, '.' decimal separator. Cell values in
// this project never contain commas or quotes, so no quoting is done.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void write_row(const std::vector<std::string>& cells);
  void flush();

 private:
  std::ofstream out_;
  std::string path_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);
void ensure_directory(const std::string& path);

}  // namespace evoplast
