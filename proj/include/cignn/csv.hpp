#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cignn::csv {

/// A parsed CSV file: one header row plus data rows. Cells are raw strings;
/// numeric/timestamp interpretation happens at the call site so parse errors
/// can name the file, row, and column. Quoting and embedded commas are not
/// supported — every data file this project reads and writes is plain.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file with a mandatory header row. Rows must all
/// have the header's column count. CRLF endings and a trailing newline are
/// tolerated; empty interior lines are not.
Table read_table(const std::filesystem::path& path);

/// Splits one CSV line on commas (no quoting rules).
std::vector<std::string> split_line(const std::string& line);

/// Strict double parse; row/column are 1-based and refer to the file layout
/// (header = row 1).
double parse_double(const std::string& cell, const std::filesystem::path& file, std::size_t row,
                    std::size_t column);

/// Shortest decimal form that round-trips to the same bits.
std::string format_double(double v);

/// Parses "YYYY-MM-DD", "YYYY-MM-DD HH:MM:SS", or "YYYY-MM-DDTHH:MM:SS"
/// (UTC, no zone suffix) into seconds since the epoch.
std::int64_t parse_timestamp(const std::string& cell, const std::filesystem::path& file,
                             std::size_t row);

/// Formats epoch seconds as "YYYY-MM-DDTHH:MM:SS".
std::string format_timestamp(std::int64_t epoch_seconds);

}  // namespace cignn::csv
