#pragma once

// Minimal CSV: header row, ',' delimiter, no quoting (all fields are numbers
// or plain identifiers), doubles with 17 significant digits.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bbs/core.hpp"
#include "bbs/dataset_io.hpp"

namespace bbs::experiments {

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

  CsvWriter& field(double v) { return push(format_double(v)); }
  CsvWriter& field(std::uint64_t v) { return push(std::to_string(v)); }
  CsvWriter& field(int v) { return push(std::to_string(v)); }
  CsvWriter& field(bool v) { return push(v ? "1" : "0"); }
  CsvWriter& field(const std::string& v) { return push(v); }
  CsvWriter& field(const char* v) { return push(v); }
  CsvWriter& empty_field() { return push(""); }

  void end_row() {
    if (pending_ != columns_) throw Error(ErrorCode::InvalidSize, "CSV row has the wrong number of fields");
    out_ << '\n';
    pending_ = 0;
  }

  std::string str() const { return out_.str(); }

  void save(const std::filesystem::path& path) const {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::MissingInput, "cannot write " + path.string());
    f << out_.str();
  }

 private:
  CsvWriter& push(const std::string& s) {
    if (pending_ > 0) out_ << ',';
    out_ << s;
    ++pending_;
    return *this;
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (const auto& c : cells) push(c);
    end_row();
  }

  std::size_t columns_;
  std::size_t pending_ = 0;
  std::ostringstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(ErrorCode::MissingInput, "CSV has no column '" + name + "'");
  }

  double number(std::size_t row, const std::string& name) const { return bbs::detail::parse_double(rows[row][column(name)]); }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::MissingInput, "cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(f, line)) throw Error(ErrorCode::MissingInput, path.string() + " is empty");
  t.header = split_csv_line(line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) throw Error(ErrorCode::ParseError, "ragged row in " + path.string());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace bbs::experiments
