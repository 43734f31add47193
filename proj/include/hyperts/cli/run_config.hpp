#pragma once

#include <string>

#include "hyperts/data/dataset.hpp"
#include "hyperts/model/config.hpp"

namespace hyperts::cli {

struct DetectorConfig {
    std::string kind = "gmm"; // gmm | pca
    int k_max = 5;
    std::string k_mode = "bic"; // bic | f1
    double variance_target = 0.95;
    std::string threshold_policy = "max"; // max | quantile
    double quantile = 0.95;
    bool sliding_normalizer = false;
    int sliding_window = 100;

    void validate() const;
};

/// One JSON document describing a whole run: model and mask settings,
/// detector choice, split ratios. Unknown keys anywhere are rejected.
struct RunConfig {
    model::ModelConfig model;
    DetectorConfig detector;
    data::SplitRatios split;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);
};

} // namespace hyperts::cli
