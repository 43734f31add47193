#pragma once

#include <vector>

#include "hyperts/core/matrix.hpp"
#include "hyperts/data/dataset.hpp"
#include "hyperts/model/model.hpp"

namespace hyperts::detect {

/// Signed prediction errors (prediction - observation) for every scored
/// timestep of a split.
Mat signed_errors(const model::Predictions& predictions, const data::TimeSeriesDataset& ds);

/// Per-feature standardization fitted on validation errors. Sigma is
/// floored so constant error columns stay finite.
struct ErrorNormalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static ErrorNormalizer fit(const Mat& val_errors);
    Mat apply(const Mat& errors) const;
};

/// Re-standardize each row against statistics of a trailing window of
/// rows (the row itself included). Used on top of ErrorNormalizer when
/// the sliding flag is on.
Mat sliding_window_normalize(const Mat& errors, int window);

} // namespace hyperts::detect
