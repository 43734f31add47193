#include "hyperts/cli/run_config.hpp"

#include <fstream>

#include "hyperts/core/error.hpp"

namespace hyperts::cli {

void DetectorConfig::validate() const {
    if (kind != "gmm" && kind != "pca")
        throw ConfigError("detector kind must be gmm or pca, got '" + kind + "'");
    if (k_mode != "bic" && k_mode != "f1")
        throw ConfigError("gmm component selection must be bic or f1, got '" + k_mode + "'");
    if (k_max < 1) throw ConfigError("gmm component bound must be >= 1");
    if (variance_target <= 0.0 || variance_target > 1.0)
        throw ConfigError("pca variance target must lie in (0, 1]");
    if (threshold_policy != "max" && threshold_policy != "quantile")
        throw ConfigError("threshold policy must be max or quantile, got '" + threshold_policy +
                          "'");
    if (quantile <= 0.0 || quantile > 1.0) throw ConfigError("quantile must lie in (0, 1]");
    if (sliding_window < 2) throw ConfigError("sliding window must be >= 2");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["model"] = model.to_json();
    j["detector"] = {{"kind", detector.kind},
                     {"k_max", detector.k_max},
                     {"k_mode", detector.k_mode},
                     {"variance_target", detector.variance_target},
                     {"threshold_policy", detector.threshold_policy},
                     {"quantile", detector.quantile},
                     {"sliding_normalizer", detector.sliding_normalizer},
                     {"sliding_window", detector.sliding_window}};
    j["split"] = {split.train, split.val, split.test};
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "model" && key != "detector" && key != "split")
            throw ConfigError("unknown config key '" + key + "'");
    }
    RunConfig c;
    try {
        if (j.contains("model")) c.model = model::ModelConfig::from_json(j.at("model"));
        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            for (const auto& [key, value] : d.items()) {
                (void)value;
                if (key != "kind" && key != "k_max" && key != "k_mode" &&
                    key != "variance_target" && key != "threshold_policy" && key != "quantile" &&
                    key != "sliding_normalizer" && key != "sliding_window")
                    throw ConfigError("unknown config key 'detector." + key + "'");
            }
            c.detector.kind = d.value("kind", c.detector.kind);
            c.detector.k_max = d.value("k_max", c.detector.k_max);
            c.detector.k_mode = d.value("k_mode", c.detector.k_mode);
            c.detector.variance_target = d.value("variance_target", c.detector.variance_target);
            c.detector.threshold_policy =
                d.value("threshold_policy", c.detector.threshold_policy);
            c.detector.quantile = d.value("quantile", c.detector.quantile);
            c.detector.sliding_normalizer =
                d.value("sliding_normalizer", c.detector.sliding_normalizer);
            c.detector.sliding_window = d.value("sliding_window", c.detector.sliding_window);
        }
        if (j.contains("split")) {
            const auto ratios = j.at("split").get<std::vector<double>>();
            if (ratios.size() != 3)
                throw ConfigError("split must list exactly three ratios");
            c.split = data::SplitRatios{ratios[0], ratios[1], ratios[2]};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
    c.detector.validate();
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    return from_json(j);
}

} // namespace hyperts::cli
