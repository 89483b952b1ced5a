#pragma once

#include <filesystem>
#include <string>

#include "manifoldshap/core.hpp"

namespace manifoldshap {

/// Parse failure with the offending 1-based line and column.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
  std::size_t line_;
  std::size_t column_;
};

/// Comma-separated file with a header row and finite decimal cells. When
/// `has_target` is set the last column becomes the dataset target.
Dataset LoadDatasetCsv(const std::filesystem::path& path, bool has_target);
Dataset ParseDatasetCsv(const std::string& text, bool has_target);

/// Writes header + rows (target appended as column "target" when present).
void WriteDatasetCsv(const Dataset& data, const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string FormatDouble(double v);

}  // namespace manifoldshap
