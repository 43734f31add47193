#pragma once

#include <vector>

#include "hyperts/detect/errors.hpp"

namespace hyperts::detect {

/// Principal-subspace detector: fit an orthonormal basis on standardized
/// validation errors, score test errors by their distance from that
/// subspace.
struct PcaDetector {
    ErrorNormalizer normalizer;
    Mat basis; // N x p, orthonormal columns
    double threshold = 0.0;

    int components() const { return static_cast<int>(basis.cols()); }
};

/// Fit on raw validation errors. The component count is the smallest p
/// whose eigenvalues explain at least variance_target of the total; the
/// threshold defaults to the maximum validation score.
PcaDetector pca_fit(const Mat& val_errors, double variance_target = 0.95);

/// score_t = l2 norm of (e - B B^T e) on standardized errors. When
/// residuals is nonnull it receives the residual matrix for attribution.
std::vector<double> pca_score(const Mat& errors, const PcaDetector& detector,
                              Mat* residuals = nullptr);

} // namespace hyperts::detect
