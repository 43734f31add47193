#include "hyperts/data/windows.hpp"

#include <algorithm>

#include "hyperts/core/error.hpp"

namespace hyperts::data {

WindowSampler::WindowSampler(const Mat& values, int window, int horizon)
    : values_(values), window_(window), horizon_(horizon) {
    if (window < 1) throw ConfigError("window length must be >= 1");
    if (horizon < 1) throw ConfigError("prediction horizon must be >= 1");
    const auto t_len = static_cast<int>(values.rows());
    if (t_len < horizon + 1)
        throw ConfigError("series of length " + std::to_string(t_len) +
                          " too short for horizon " + std::to_string(horizon));
    count_ = t_len - horizon;
}

WindowBatch WindowSampler::make_batch(std::span<const int> ids) const {
    const auto batch = static_cast<int>(ids.size());
    const auto n = static_cast<int>(values_.cols());
    WindowBatch out;
    out.inputs = num::Tensor::zeros({batch, n, window_});
    out.targets = num::Tensor::zeros({batch, n});
    out.anchors.reserve(ids.size());
    out.target_rows.reserve(ids.size());

    for (int b = 0; b < batch; ++b) {
        const int anchor = ids[static_cast<std::size_t>(b)];
        if (anchor < 0 || anchor >= count_)
            throw ConfigError("window anchor " + std::to_string(anchor) + " out of range");
        out.anchors.push_back(anchor);
        out.target_rows.push_back(anchor + horizon_);
        for (int c = 0; c < n; ++c) {
            const std::size_t base =
                (static_cast<std::size_t>(b) * n + static_cast<std::size_t>(c)) * window_;
            for (int j = 0; j < window_; ++j) {
                const int row = std::max(0, anchor - window_ + 1 + j); // copy padding
                out.inputs.data()[base + static_cast<std::size_t>(j)] =
                    values_(static_cast<std::size_t>(row), static_cast<std::size_t>(c));
            }
            out.targets.data()[static_cast<std::size_t>(b) * n + static_cast<std::size_t>(c)] =
                values_(static_cast<std::size_t>(anchor + horizon_), static_cast<std::size_t>(c));
        }
    }
    return out;
}

std::vector<WindowBatch> make_windows(const Mat& values, int window, int horizon,
                                      int batch_size) {
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    WindowSampler sampler(values, window, horizon);
    std::vector<WindowBatch> batches;
    std::vector<int> ids;
    for (int start = 0; start < sampler.count(); start += batch_size) {
        const int end = std::min(start + batch_size, sampler.count());
        ids.clear();
        for (int i = start; i < end; ++i) ids.push_back(i);
        batches.push_back(sampler.make_batch(ids));
    }
    return batches;
}

} // namespace hyperts::data
