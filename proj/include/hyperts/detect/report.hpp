#pragma once

#include <string>
#include <vector>

#include "hyperts/core/matrix.hpp"

namespace hyperts::detect {

enum class ThresholdPolicy { max, quantile };

/// Pick a decision threshold from validation scores. The max policy flags
/// nothing on validation by construction; quantile picks the nearest-rank
/// empirical quantile.
double threshold_select(const std::vector<double>& val_scores, ThresholdPolicy policy,
                        double q = 0.95);

/// Per-timestep decisions plus the attribution of each flagged step to
/// its strongest error feature.
struct AnomalyReport {
    std::vector<int> timesteps; // split-local row of the scored observation
    std::vector<double> scores;
    double threshold = 0.0;
    std::vector<std::uint8_t> flags;
    std::vector<int> top_feature; // index, -1 when not flagged
    std::vector<std::string> feature_names;

    std::size_t flagged_count() const;
};

/// flags = scores > threshold; attribution = argmax |attribution_errors|
/// per flagged row (pass normalized errors, or PCA residuals).
AnomalyReport flag_anomalies(const std::vector<double>& scores, double threshold,
                     const Mat& attribution_errors, const std::vector<int>& timesteps,
                     std::vector<std::string> feature_names);

void write_report_csv(const std::string& path, const AnomalyReport& report);
void write_report_json(const std::string& path, const AnomalyReport& report,
                       const std::string& detector_kind);
AnomalyReport load_report_csv(const std::string& path);

} // namespace hyperts::detect
