#pragma once

#include <string>
#include <vector>

#include "hyperts/data/dataset.hpp"
#include "hyperts/model/model.hpp"

namespace hyperts::model {

/// Everything needed to resume or serve a trained model: configuration,
/// normalization state, training progress and all parameter tensors.
/// Reloading reproduces forward outputs bit-exactly.
struct Checkpoint {
    ModelConfig config;
    data::NormalizationState norm;
    int epoch = 0;
    std::vector<double> loss_history;
    ModelParams params;
};

/// Single-file container: magic + version, a JSON header carrying config,
/// normalization, history and a tensor manifest, then raw little-endian
/// float64 blobs in manifest order.
void save_checkpoint(const std::string& path, Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

} // namespace hyperts::model
