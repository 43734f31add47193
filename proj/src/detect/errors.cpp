#include "hyperts/detect/errors.hpp"

#include <algorithm>
#include <cmath>

#include "hyperts/core/error.hpp"

namespace hyperts::detect {

namespace {
constexpr double kSigmaFloor = 1e-8;
}

Mat signed_errors(const model::Predictions& predictions, const data::TimeSeriesDataset& ds) {
    const std::size_t rows = predictions.values.rows();
    const std::size_t cols = predictions.values.cols();
    if (cols != ds.features())
        throw DimensionError("signed_errors: prediction width does not match the dataset");
    Mat errors(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto target = static_cast<std::size_t>(predictions.target_rows[r]);
        for (std::size_t c = 0; c < cols; ++c)
            errors(r, c) = predictions.values(r, c) - ds.values(target, c);
    }
    return errors;
}

ErrorNormalizer ErrorNormalizer::fit(const Mat& val_errors) {
    if (val_errors.rows() == 0) throw DataError("ErrorNormalizer: no validation errors");
    const std::size_t n = val_errors.cols();
    ErrorNormalizer norm;
    norm.mean.assign(n, 0.0);
    norm.stddev.assign(n, 0.0);
    const auto rows = static_cast<double>(val_errors.rows());
    for (std::size_t c = 0; c < n; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < val_errors.rows(); ++r) m += val_errors(r, c);
        m /= rows;
        double v = 0.0;
        for (std::size_t r = 0; r < val_errors.rows(); ++r) {
            const double d = val_errors(r, c) - m;
            v += d * d;
        }
        norm.mean[c] = m;
        norm.stddev[c] = std::max(std::sqrt(v / rows), kSigmaFloor);
    }
    return norm;
}

Mat ErrorNormalizer::apply(const Mat& errors) const {
    if (errors.cols() != mean.size())
        throw DimensionError("ErrorNormalizer: fitted on " + std::to_string(mean.size()) +
                             " features, applied to " + std::to_string(errors.cols()));
    Mat out(errors.rows(), errors.cols());
    for (std::size_t r = 0; r < errors.rows(); ++r)
        for (std::size_t c = 0; c < errors.cols(); ++c)
            out(r, c) = (errors(r, c) - mean[c]) / stddev[c];
    return out;
}

Mat sliding_window_normalize(const Mat& errors, int window) {
    if (window < 2) throw ConfigError("sliding window length must be >= 2");
    Mat out(errors.rows(), errors.cols());
    for (std::size_t r = 0; r < errors.rows(); ++r) {
        const std::size_t begin = r + 1 >= static_cast<std::size_t>(window)
                                      ? r + 1 - static_cast<std::size_t>(window)
                                      : 0;
        const auto count = static_cast<double>(r - begin + 1);
        for (std::size_t c = 0; c < errors.cols(); ++c) {
            double m = 0.0;
            for (std::size_t k = begin; k <= r; ++k) m += errors(k, c);
            m /= count;
            double v = 0.0;
            for (std::size_t k = begin; k <= r; ++k) {
                const double d = errors(k, c) - m;
                v += d * d;
            }
            const double sd = std::max(std::sqrt(v / count), kSigmaFloor);
            out(r, c) = (errors(r, c) - m) / sd;
        }
    }
    return out;
}

} // namespace hyperts::detect
