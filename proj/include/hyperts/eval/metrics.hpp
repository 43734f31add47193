#pragma once

#include <cstdint>
#include <vector>

namespace hyperts::eval {

struct ConfusionCounts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Pointwise confusion counts, no segment adjustment.
ConfusionCounts confusion(const std::vector<std::uint8_t>& flags,
                          const std::vector<std::uint8_t>& labels);

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Zero denominators yield zero by convention.
Metrics metrics(const ConfusionCounts& counts);

/// Credit whole labeled segments once any point inside is flagged.
/// Off by default everywhere; provided for comparability.
std::vector<std::uint8_t> point_adjust(const std::vector<std::uint8_t>& flags,
                                       const std::vector<std::uint8_t>& labels);

} // namespace hyperts::eval
