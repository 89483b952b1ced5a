#include "manifoldshap/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace manifoldshap {

namespace {

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string Trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

CsvError::CsvError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + what),
      reason_(what),
      line_(line),
      column_(column) {}

Dataset ParseDatasetCsv(const std::string& text, bool has_target) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!Trim(line).empty()) {
      for (auto& h : SplitLine(line)) header.push_back(Trim(h));
      break;
    }
  }
  if (header.empty()) throw CsvError("missing header row", line_no, 1);
  const std::size_t width = header.size();
  if (has_target && width < 2) {
    throw CsvError("target column requested but only one column present",
                   line_no, 1);
  }

  std::vector<double> values;
  std::vector<double> target;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto cells = SplitLine(line);
    if (cells.size() != width) {
      throw CsvError("expected " + std::to_string(width) + " cells, found " +
                         std::to_string(cells.size()),
                     line_no, std::min(cells.size(), width) + 1);
    }
    for (std::size_t j = 0; j < width; ++j) {
      const std::string cell = Trim(cells[j]);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw CsvError("cannot parse '" + cell + "' (column '" + header[j] +
                           "') as a finite number",
                       line_no, j + 1);
      }
      if (has_target && j + 1 == width) {
        target.push_back(v);
      } else {
        values.push_back(v);
      }
    }
    ++n;
  }
  if (n == 0) throw CsvError("no data rows", line_no, 1);
  if (has_target) header.pop_back();
  std::optional<std::vector<double>> t;
  if (has_target) t = std::move(target);
  const std::size_t d = header.size();
  return Dataset(n, d, std::move(values), std::move(header), std::move(t));
}

Dataset LoadDatasetCsv(const std::filesystem::path& path, bool has_target) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return ParseDatasetCsv(buf.str(), has_target);
  } catch (const CsvError& e) {
    throw CsvError(e.reason() + " in " + path.string(), e.line(), e.column());
  }
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void WriteDatasetCsv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& names = data.feature_names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  if (data.target()) out << ",target";
  out << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j)
      out << (j ? "," : "") << FormatDouble(data.at(i, j));
    if (data.target()) out << ',' << FormatDouble((*data.target())[i]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace manifoldshap
