#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace damseg {

/// Header plus string cells; the reporting format for every experiment.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::string_view name) const;
    void add_row(std::vector<std::string> cells);
};

/// Shortest decimal that parses back to the same double.
std::string format_number(double value);
std::string format_number(long long value);

void write_csv(std::ostream& out, const CsvTable& table);
std::string to_csv_string(const CsvTable& table);
/// Throws FormatError naming the offending line on ragged rows or a missing header.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
void write_csv_file(const std::string& path, const CsvTable& table);

}  // namespace damseg
