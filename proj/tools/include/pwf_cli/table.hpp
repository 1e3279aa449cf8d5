#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace pwf::cli {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::string name;
    std::string description;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
    std::size_t column(const std::string& name) const; // throws when absent
    bool has_column(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
    bool operator==(const Table&) const = default;
};

// Shortest form that survives a round trip is not used on purpose: every double is written
// with 17 significant digits so output is byte-stable across platforms.
std::string format_double(double v);
std::string format_cell(const Cell& c);

void write_csv(std::ostream& out, const Table& t);
void write_csv(const std::filesystem::path& path, const Table& t);
// Integers without a decimal point or exponent load as integers, numbers as doubles, the rest as text.
Table read_csv(std::istream& in, std::string name = {});
Table read_csv(const std::filesystem::path& path);

} // namespace pwf::cli
