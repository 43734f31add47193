#include "hyperts/core/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hyperts/core/error.hpp"

namespace hyperts::csv {

static std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != table.header.size()) {
                throw DataError(path + ": row " + std::to_string(table.rows.size() + 2) +
                                " has " + std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(table.header.size()));
            }
            table.rows.push_back(std::move(cells));
        }
    }
    if (first) throw DataError(path + ": empty file (no header row)");
    return table;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_matrix(const std::string& path, const std::vector<std::string>& header,
                  const Mat& values) {
    if (!header.empty() && header.size() != values.cols())
        throw DimensionError("csv::write_matrix: header width " + std::to_string(header.size()) +
                             " vs " + std::to_string(values.cols()) + " columns");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        out << header[c];
    }
    out << '\n';
    for (std::size_t r = 0; r < values.rows(); ++r) {
        for (std::size_t c = 0; c < values.cols(); ++c) {
            if (c) out << ',';
            out << format_double(values(r, c));
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

} // namespace hyperts::csv
