#pragma once

#include "mobnet/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mobnet {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Locale-independent double parse; nullopt on failure.
std::optional<double> parse_double(std::string_view s);

std::optional<long long> parse_int(std::string_view s);

std::vector<std::string> split_line(std::string_view line, char delimiter);

/// A delimited text table held in memory; header optional.
struct DelimitedTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row

  /// Column position by header name; -1 when absent.
  int column(std::string_view name) const;
};

/// Reads a delimited file. If the first line contains any non-numeric cell
/// it is treated as the header row.
DelimitedTable read_delimited(const std::filesystem::path& path, char delimiter = ',');

/// Writes content to `path` via a temp file in the same directory plus
/// rename, so partially written files are never visible.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace mobnet
