#include "cignn/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "cignn/errors.hpp"

namespace cignn::csv {

namespace {

// Civil-calendar conversions (proleptic Gregorian, UTC).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool parse_fixed_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
    out = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9') {
            return false;
        }
        out = out * 10 + (s[i] - '0');
    }
    return true;
}

}  // namespace

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    Table table;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            // allow a trailing newline, reject holes in the middle
            if (in.peek() != std::ifstream::traits_type::eof()) {
                throw ParseError(path.string() + ": empty line at row " + std::to_string(row));
            }
            break;
        }
        std::vector<std::string> cells = split_line(line);
        if (row == 1) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ParseError(path.string() + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) {
        throw ParseError(path.string() + ": missing header row");
    }
    return table;
}

double parse_double(const std::string& cell, const std::filesystem::path& file, std::size_t row,
                    std::size_t column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || cell.empty()) {
        throw ParseError(file.string() + ": row " + std::to_string(row) + ", column " +
                         std::to_string(column) + ": not a number: \"" + cell + "\"");
    }
    return value;
}

std::string format_double(double v) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
    (void)ec;  // 32 bytes always suffice for the shortest form
    return std::string(buffer, ptr);
}

std::int64_t parse_timestamp(const std::string& cell, const std::filesystem::path& file,
                             std::size_t row) {
    const auto fail = [&]() -> ParseError {
        return ParseError(file.string() + ": row " + std::to_string(row) +
                          ": not a timestamp (want YYYY-MM-DD[{T| }HH:MM:SS]): \"" + cell + "\"");
    };
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (cell.size() != 10 && cell.size() != 19) {
        throw fail();
    }
    if (!parse_fixed_int(cell, 0, 4, year) || cell[4] != '-' || !parse_fixed_int(cell, 5, 2, month) ||
        cell[7] != '-' || !parse_fixed_int(cell, 8, 2, day)) {
        throw fail();
    }
    if (cell.size() == 19) {
        if ((cell[10] != 'T' && cell[10] != ' ') || !parse_fixed_int(cell, 11, 2, hour) ||
            cell[13] != ':' || !parse_fixed_int(cell, 14, 2, minute) || cell[16] != ':' ||
            !parse_fixed_int(cell, 17, 2, second)) {
            throw fail();
        }
    }
    if (month < 1 || month > 12 || day < 1 || hour > 23 || minute > 59 || second > 59) {
        throw fail();
    }
    const bool leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
    constexpr int kMonthDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (day > (month == 2 && leap ? 29 : kMonthDays[month - 1])) {
        throw fail();
    }
    return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400 +
           hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t year = 0;
    unsigned month = 0, day = 0;
    civil_from_days(days, year, month, day);
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                  static_cast<long long>(year), month, day, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem % 3600) / 60), static_cast<long long>(rem % 60));
    return buffer;
}

}  // namespace cignn::csv
