#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cooptrack::io {

// Numeric CSV with a header row. Lines starting with '#' are comments.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

// Parses a numeric CSV and checks that the header equals `expected`. Errors
// are DataError naming the file and line.
CsvTable read_numeric_csv(const std::filesystem::path& path,
                          std::initializer_list<std::string_view> expected);

// Fixed-point rendering; "-0.000000" is normalized to "0.000000".
std::string format_fixed(double value, int decimals = 6);

// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Row-oriented text builder for CSV output.
class CsvBuilder {
 public:
  explicit CsvBuilder(std::initializer_list<std::string_view> header);

  CsvBuilder& comment(std::string_view text);

  // Starts a new row; subsequent cell() calls append to it.
  CsvBuilder& row();
  CsvBuilder& cell(std::string_view text);
  CsvBuilder& cell(double value, int decimals = 6);
  CsvBuilder& cell(long long value);
  CsvBuilder& cell(int value) { return cell(static_cast<long long>(value)); }

  std::string str() const;

 private:
  std::string header_;
  std::string comments_;
  std::ostringstream body_;
  bool row_open_ = false;
  bool first_cell_ = true;
};

// 64-bit FNV-1a; stable across platforms, used for config fingerprints.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t value);

}  // namespace cooptrack::io
