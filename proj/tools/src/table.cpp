#include "pwf_cli/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pwf::cli {

void Table::add_row(std::vector<Cell> row)
{
    if (row.size() != columns.size()) throw std::invalid_argument("row width does not match table " + name);
    rows.push_back(std::move(row));
}

bool Table::has_column(const std::string& c) const
{
    for (const auto& x : columns)
        if (x == c) return true;
    return false;
}

std::size_t Table::column(const std::string& c) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == c) return i;
    throw std::out_of_range("table " + name + " has no column '" + c + "'");
}

double Table::number(std::size_t row, std::size_t col) const
{
    const Cell& c = rows.at(row).at(col);
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c)) return double(*i);
    throw std::invalid_argument("column " + columns[col] + " of table " + name + " is not numeric");
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

namespace {

std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

Cell parse_cell(const std::string& s, bool quoted)
{
    if (quoted || s.empty()) return s;
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    const char* b = s.data();
    const char* e = b + s.size();
    if (s.find_first_of(".eE") == std::string::npos && s != "-0") { // "-0" only comes from a double
        std::int64_t i;
        auto r = std::from_chars(b, e, i);
        if (r.ec == std::errc() && r.ptr == e) return i;
    }
    double d;
    auto r = std::from_chars(b, e, d);
    if (r.ec == std::errc() && r.ptr == e) return d;
    return s;
}

// RFC 4180 record splitting; a quoted cell may hold commas, quotes and newlines
bool read_record(std::istream& in, std::vector<std::string>& cells, std::vector<bool>& quoted)
{
    cells.clear();
    quoted.clear();
    int ch = in.peek();
    if (ch == EOF) return false;
    std::string cur;
    bool q = false, in_quotes = false;
    while (true) {
        ch = in.get();
        if (ch == EOF) break;
        char c = char(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    cur += '"';
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = q = true;
        } else if (c == ',') {
            cells.push_back(cur);
            quoted.push_back(q);
            cur.clear();
            q = false;
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    quoted.push_back(q);
    return true;
}

} // namespace

std::string format_cell(const Cell& c)
{
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    // text that would load back as a number (or nothing) is quoted to keep its type
    if (s.empty() || !std::holds_alternative<std::string>(parse_cell(s, false))) {
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"') q += '"';
            q += ch;
        }
        return q + "\"";
    }
    return quote(s);
}

void write_csv(std::ostream& out, const Table& t)
{
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << quote(t.columns[i]);
    out << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_cell(r[i]);
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const Table& t)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv(out, t);
}

Table read_csv(std::istream& in, std::string name)
{
    Table t;
    t.name = std::move(name);
    std::vector<std::string> cells;
    std::vector<bool> quoted;
    if (!read_record(in, cells, quoted)) throw std::runtime_error("empty CSV");
    t.columns = cells;
    while (read_record(in, cells, quoted)) {
        if (cells.size() == 1 && cells[0].empty() && !quoted[0]) continue;
        if (cells.size() != t.columns.size()) throw std::runtime_error("ragged CSV row in " + t.name);
        std::vector<Cell> row;
        for (std::size_t i = 0; i < cells.size(); ++i) row.push_back(parse_cell(cells[i], quoted[i]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_csv(in, path.stem().string());
}

} // namespace pwf::cli
