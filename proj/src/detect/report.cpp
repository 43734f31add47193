#include "hyperts/detect/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hyperts/core/csv.hpp"
#include "hyperts/core/error.hpp"
#include "json.hpp"

namespace hyperts::detect {

double threshold_select(const std::vector<double>& val_scores, ThresholdPolicy policy, double q) {
    if (val_scores.empty()) throw DataError("threshold_select: no validation scores");
    if (policy == ThresholdPolicy::max)
        return *std::max_element(val_scores.begin(), val_scores.end());
    if (q <= 0.0 || q > 1.0) throw ConfigError("quantile must lie in (0, 1]");
    std::vector<double> sorted = val_scores;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n));
    rank = std::min(std::max<std::size_t>(rank, 1), sorted.size());
    return sorted[rank - 1];
}

std::size_t AnomalyReport::flagged_count() const {
    std::size_t count = 0;
    for (auto f : flags) count += f;
    return count;
}

AnomalyReport flag_anomalies(const std::vector<double>& scores, double threshold,
                     const Mat& attribution_errors, const std::vector<int>& timesteps,
                     std::vector<std::string> feature_names) {
    if (scores.size() != attribution_errors.rows() || scores.size() != timesteps.size())
        throw DimensionError("detect: scores, errors and timesteps must align");
    AnomalyReport report;
    report.scores = scores;
    report.threshold = threshold;
    report.timesteps = timesteps;
    report.feature_names = std::move(feature_names);
    report.flags.resize(scores.size());
    report.top_feature.assign(scores.size(), -1);
    for (std::size_t r = 0; r < scores.size(); ++r) {
        report.flags[r] = scores[r] > threshold ? 1 : 0;
        if (report.flags[r]) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < attribution_errors.cols(); ++c)
                if (std::abs(attribution_errors(r, c)) > std::abs(attribution_errors(r, best)))
                    best = c;
            report.top_feature[r] = static_cast<int>(best);
        }
    }
    return report;
}

void write_report_csv(const std::string& path, const AnomalyReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path);
    out << "timestep,score,threshold,flag,top_feature\n";
    for (std::size_t r = 0; r < report.scores.size(); ++r) {
        out << report.timesteps[r] << ',' << csv::format_double(report.scores[r]) << ','
            << csv::format_double(report.threshold) << ',' << int(report.flags[r]) << ',';
        if (report.top_feature[r] >= 0)
            out << report.feature_names[static_cast<std::size_t>(report.top_feature[r])];
        out << '\n';
    }
    if (!out) throw DataError("report write failed: " + path);
}

void write_report_json(const std::string& path, const AnomalyReport& report,
                       const std::string& detector_kind) {
    nlohmann::json j;
    j["detector"] = detector_kind;
    j["threshold"] = report.threshold;
    j["n_scored"] = report.scores.size();
    j["n_flagged"] = report.flagged_count();
    double max_score = 0.0;
    for (double s : report.scores) max_score = std::max(max_score, s);
    j["max_score"] = max_score;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report summary: " + path);
    out << j.dump(2) << '\n';
}

AnomalyReport load_report_csv(const std::string& path) {
    auto table = csv::read_file(path);
    const std::vector<std::string> expected{"timestep", "score", "threshold", "flag",
                                            "top_feature"};
    if (table.header != expected) throw DataError(path + ": not an anomaly report");
    AnomalyReport report;
    for (const auto& row : table.rows) {
        report.timesteps.push_back(std::stoi(row[0]));
        report.scores.push_back(std::stod(row[1]));
        report.threshold = std::stod(row[2]);
        report.flags.push_back(row[3] == "1" ? 1 : 0);
        report.top_feature.push_back(-1);
        if (!row[4].empty()) {
            auto it = std::find(report.feature_names.begin(), report.feature_names.end(), row[4]);
            if (it == report.feature_names.end()) {
                report.feature_names.push_back(row[4]);
                report.top_feature.back() = static_cast<int>(report.feature_names.size()) - 1;
            } else {
                report.top_feature.back() =
                    static_cast<int>(std::distance(report.feature_names.begin(), it));
            }
        }
    }
    return report;
}

} // namespace hyperts::detect
