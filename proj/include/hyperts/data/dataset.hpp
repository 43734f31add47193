#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperts/core/matrix.hpp"

namespace hyperts::data {

/// A multivariate series: one row per timestep, one column per feature.
/// Missing values are NaN until clean() runs. Labels, when present, mark
/// anomalous timesteps.
struct TimeSeriesDataset {
    Mat values; // T x N
    std::vector<std::string> feature_names;
    std::vector<std::uint8_t> labels;   // empty or size T
    std::vector<double> timestamps;     // empty or size T

    std::size_t timesteps() const { return values.rows(); }
    std::size_t features() const { return values.cols(); }
    bool has_labels() const { return !labels.empty(); }
};

struct CsvSchema {
    std::string label_column = "label";
    std::string timestamp_column = "timestamp";
};

/// Parse a CSV with a header row. Column names are stripped of path
/// prefixes; a column matching the schema's label name becomes the 0/1
/// label vector. Empty or "nan" cells are missing values; any other
/// non-numeric cell is an ingest error carrying row and column.
TimeSeriesDataset load_csv(const std::string& path, const CsvSchema& schema = {});

void save_csv(const std::string& path, const TimeSeriesDataset& ds);

/// Strip directory-like prefixes from a raw column name.
std::string strip_path_prefix(const std::string& name);

/// Fill missing values: all-missing columns become zero, partially missing
/// cells take the column mean of observed values. Idempotent.
TimeSeriesDataset clean(const TimeSeriesDataset& ds);

struct NormalizationState {
    std::vector<std::string> feature_names;
    std::vector<double> min_values;
    std::vector<double> max_values;

    void save_json(const std::string& path) const;
    static NormalizationState load_json(const std::string& path);
};

/// Fit per-feature min/max on the training split only.
NormalizationState minmax_fit(const TimeSeriesDataset& train);

/// Apply a fitted transform. Features that were constant during fitting
/// (max - min below 1e-12) map to 0 everywhere.
TimeSeriesDataset minmax_apply(const TimeSeriesDataset& ds, const NormalizationState& state);

/// Inverse transform; constant features recover their fitted minimum.
TimeSeriesDataset minmax_invert(const TimeSeriesDataset& ds, const NormalizationState& state);

struct SplitRatios {
    double train = 0.7;
    double val = 0.15;
    double test = 0.15;
};

struct Splits {
    TimeSeriesDataset train, val, test;
};

/// Chronological contiguous split, train before val before test. Floor
/// arithmetic on train and val lengths; the remainder goes to test.
/// Every split must have at least min_len timesteps.
Splits split(const TimeSeriesDataset& ds, const SplitRatios& ratios, std::size_t min_len);

} // namespace hyperts::data
