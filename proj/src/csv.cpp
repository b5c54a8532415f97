#include "cooptrack/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <system_error>

#include "cooptrack/error.hpp"

namespace cooptrack::io {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

CsvTable read_numeric_csv(const std::filesystem::path& path,
                          std::initializer_list<std::string_view> expected) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split(view);
    if (!have_header) {
      for (auto f : fields) table.header.emplace_back(trim(f));
      if (table.header.size() != expected.size() ||
          !std::equal(table.header.begin(), table.header.end(), expected.begin())) {
        std::string want;
        for (auto e : expected) want += (want.empty() ? "" : ",") + std::string(e);
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected header '" +
                        want + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != expected.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(expected.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) {
      const std::string cell(trim(f));
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": invalid number '" +
                        cell + "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw DataError(path.string() + ": missing header row");
  return table;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvBuilder::CsvBuilder(std::initializer_list<std::string_view> header) {
  for (auto h : header) {
    if (!header_.empty()) header_ += ',';
    header_ += h;
  }
}

CsvBuilder& CsvBuilder::comment(std::string_view text) {
  comments_ += "# ";
  comments_ += text;
  comments_ += '\n';
  return *this;
}

CsvBuilder& CsvBuilder::row() {
  if (row_open_) body_ << '\n';
  row_open_ = true;
  first_cell_ = true;
  return *this;
}

CsvBuilder& CsvBuilder::cell(std::string_view text) {
  if (!first_cell_) body_ << ',';
  body_ << text;
  first_cell_ = false;
  return *this;
}

CsvBuilder& CsvBuilder::cell(double value, int decimals) {
  return cell(std::string_view(format_fixed(value, decimals)));
}

CsvBuilder& CsvBuilder::cell(long long value) {
  return cell(std::string_view(std::to_string(value)));
}

std::string CsvBuilder::str() const {
  std::string out = comments_ + header_ + '\n' + body_.str();
  if (row_open_) out += '\n';
  return out;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, value);
  return buf;
}

}  // namespace cooptrack::io
