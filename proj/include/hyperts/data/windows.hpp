#pragma once

#include <span>
#include <vector>

#include "hyperts/core/matrix.hpp"
#include "hyperts/num/tensor.hpp"

namespace hyperts::data {

/// One mini-batch of (window, target) pairs. inputs is B x N x K with the
/// newest timestep in the last column; targets is B x N, the values h steps
/// after each window's end.
struct WindowBatch {
    num::Tensor inputs;
    num::Tensor targets;
    std::vector<int> anchors;     // window end rows, one per pair
    std::vector<int> target_rows; // anchor + horizon
};

/// Enumerates stride-1 sliding windows over a T x N value matrix. Windows
/// ending before row K-1 are left-padded by repeating the first row.
class WindowSampler {
public:
    WindowSampler(const Mat& values, int window, int horizon);

    int count() const { return count_; }
    int window() const { return window_; }
    int horizon() const { return horizon_; }

    /// Build a batch for the given anchor ids; id i anchors the window at
    /// row i, so valid ids are [0, count).
    WindowBatch make_batch(std::span<const int> ids) const;

private:
    const Mat& values_;
    int window_;
    int horizon_;
    int count_;
};

/// All windows in chronological order, chunked into batches.
std::vector<WindowBatch> make_windows(const Mat& values, int window, int horizon,
                                      int batch_size);

} // namespace hyperts::data
