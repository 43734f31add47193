#pragma once

#include <string>
#include <vector>

#include "hyperts/core/matrix.hpp"

namespace hyperts::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Read a comma-separated file with a mandatory header row. Cells are kept
/// as raw strings; parsing to numbers happens at the call site so errors
/// can carry row/column context.
Table read_file(const std::string& path);

/// Write a numeric matrix with a header row. Values are printed with 17
/// significant digits so doubles survive a round trip.
void write_matrix(const std::string& path, const std::vector<std::string>& header,
                  const Mat& values);

std::string format_double(double v);

} // namespace hyperts::csv
