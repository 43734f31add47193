#include "hyperts/detect/pca.hpp"

#include <algorithm>
#include <cmath>

#include "hyperts/core/error.hpp"
#include "hyperts/core/linalg.hpp"

namespace hyperts::detect {

PcaDetector pca_fit(const Mat& val_errors, double variance_target) {
    if (variance_target <= 0.0 || variance_target > 1.0)
        throw ConfigError("variance target must lie in (0, 1]");
    const std::size_t n = val_errors.cols();
    if (val_errors.rows() < n)
        throw DataError("pca_fit needs at least as many validation rows as features");

    PcaDetector det;
    det.normalizer = ErrorNormalizer::fit(val_errors);
    const Mat standardized = det.normalizer.apply(val_errors);

    Mat cov(n, n);
    const auto rows = static_cast<double>(standardized.rows());
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b) {
            double acc = 0.0;
            for (std::size_t r = 0; r < standardized.rows(); ++r)
                acc += standardized(r, a) * standardized(r, b);
            cov(a, b) = cov(b, a) = acc / rows;
        }

    auto eig = linalg::sym_eigen(cov); // ascending
    std::vector<double> values(eig.values.rbegin(), eig.values.rend());
    for (auto& v : values) v = std::max(v, 0.0);
    double total = 0.0;
    for (double v : values) total += v;
    total = std::max(total, 1e-12);

    std::size_t p = 1;
    double cum = values[0];
    while (p < n && cum + 1e-9 * total < variance_target * total) {
        cum += values[p];
        ++p;
    }

    det.basis = Mat(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        const std::size_t src = n - 1 - j; // descending eigenvalue order
        for (std::size_t r = 0; r < n; ++r) det.basis(r, j) = eig.vectors(r, src);
    }

    PcaDetector unthresholded = det;
    auto val_scores = pca_score(val_errors, unthresholded);
    det.threshold = *std::max_element(val_scores.begin(), val_scores.end());
    return det;
}

std::vector<double> pca_score(const Mat& errors, const PcaDetector& detector, Mat* residuals) {
    const std::size_t n = detector.basis.rows();
    if (errors.cols() != n)
        throw DimensionError("pca_score: detector fitted on " + std::to_string(n) +
                             " features, got " + std::to_string(errors.cols()));
    const Mat standardized = detector.normalizer.apply(errors);
    const std::size_t p = detector.basis.cols();

    if (residuals != nullptr) *residuals = Mat(errors.rows(), n);
    std::vector<double> scores(errors.rows());
    std::vector<double> coeffs(p);
    for (std::size_t r = 0; r < errors.rows(); ++r) {
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < n; ++c) acc += detector.basis(c, j) * standardized(r, c);
            coeffs[j] = acc;
        }
        double norm_sq = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            double recon = 0.0;
            for (std::size_t j = 0; j < p; ++j) recon += detector.basis(c, j) * coeffs[j];
            const double diff = standardized(r, c) - recon;
            if (residuals != nullptr) (*residuals)(r, c) = diff;
            norm_sq += diff * diff;
        }
        scores[r] = std::sqrt(norm_sq);
    }
    return scores;
}

} // namespace hyperts::detect
