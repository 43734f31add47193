#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hyperts/detect/errors.hpp"

namespace hyperts::detect {

/// Diagonal-covariance Gaussian mixture over standardized errors; the
/// anomaly score is the negative log-likelihood.
struct GmmDetector {
    ErrorNormalizer normalizer;
    std::vector<double> weights; // k, nonnegative, sums to 1
    Mat means;                   // k x N
    Mat variances;               // k x N, floored diagonal covariances
    double threshold = 0.0;

    /// Mean log-likelihood per EM iteration of the selected fit.
    std::vector<double> em_trace;

    int components() const { return static_cast<int>(weights.size()); }
};

enum class KSelection { bic, f1 };

struct GmmFitOptions {
    int k_max = 5;
    KSelection mode = KSelection::bic;
    int max_iter = 200;
    double tol = 1e-6; // mean log-likelihood gain per row
    std::uint64_t seed = 1;
};

/// Expectation-maximization per candidate component count; k is chosen by
/// BIC, or by best validation F1 when labels are supplied and mode is f1.
/// The training log-likelihood is checked to be nondecreasing on every
/// iteration; collapsed components are re-seeded from data points, at
/// most three times per fit. The threshold defaults to the maximum
/// validation score.
GmmDetector gmm_fit(const Mat& val_errors, const GmmFitOptions& options = {},
                    const std::vector<std::uint8_t>* val_labels = nullptr);

/// Negative log-likelihood per row of raw errors.
std::vector<double> gmm_score(const Mat& errors, const GmmDetector& detector);

} // namespace hyperts::detect
