#include "hyperts/eval/metrics.hpp"

#include "hyperts/core/error.hpp"

namespace hyperts::eval {

ConfusionCounts confusion(const std::vector<std::uint8_t>& flags,
                          const std::vector<std::uint8_t>& labels) {
    if (flags.size() != labels.size())
        throw DimensionError("confusion: " + std::to_string(flags.size()) + " flags vs " +
                             std::to_string(labels.size()) + " labels");
    ConfusionCounts c;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i] && labels[i])
            ++c.tp;
        else if (flags[i] && !labels[i])
            ++c.fp;
        else if (!flags[i] && labels[i])
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    Metrics m;
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

std::vector<std::uint8_t> point_adjust(const std::vector<std::uint8_t>& flags,
                                       const std::vector<std::uint8_t>& labels) {
    if (flags.size() != labels.size())
        throw DimensionError("point_adjust: flags and labels must align");
    std::vector<std::uint8_t> adjusted = flags;
    std::size_t i = 0;
    while (i < labels.size()) {
        if (!labels[i]) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < labels.size() && labels[end]) ++end;
        bool hit = false;
        for (std::size_t k = i; k < end && !hit; ++k) hit = flags[k] != 0;
        if (hit)
            for (std::size_t k = i; k < end; ++k) adjusted[k] = 1;
        i = end;
    }
    return adjusted;
}

} // namespace hyperts::eval
