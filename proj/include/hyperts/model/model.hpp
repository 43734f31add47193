#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hyperts/data/dataset.hpp"
#include "hyperts/data/windows.hpp"
#include "hyperts/model/config.hpp"

namespace hyperts::model {

/// Every trainable tensor and normalization buffer of the forecaster. All
/// groups are always allocated, whatever the ablation, so checkpoints and
/// RNG consumption do not depend on the variant being trained.
struct ModelParams {
    hg::MtclParams mtcl;
    gconv::GslState gsl;
    tcn::TcnParams tcn;

    // Per-node temporal MLP replacing the TCN in the no_tcn variant.
    num::Tensor time_w1, time_b1, time_w2, time_b2;

    // 1x1 feature transform applied after node mixing.
    num::Tensor spatial_w, spatial_b;

    // Dense all-to-all spatial layer for the no_gcn variant.
    num::Tensor dense_w, dense_b;

    struct MlpLayer {
        num::Tensor w, b, gamma, beta;
        num::BatchNormState bn;
    };
    std::vector<MlpLayer> mlp;
    num::Tensor head_w, head_b;

    static ModelParams init(const ModelConfig& config, Rng& rng);

    /// Trainable tensors in a fixed order (checkpoint manifest order).
    std::vector<std::pair<std::string, num::Tensor>> named() const;
    /// Non-trainable buffers: batch-norm running statistics.
    std::vector<std::pair<std::string, std::vector<double>*>> named_buffers();
};

/// Node-mixing operator for the configured variant, built inside g so
/// gradients reach the structure parameters. `identity` marks the no_gcn
/// variant, which has no mixing step at all.
struct SpatialStructure {
    num::Tensor mixing;    // N x N, undefined when identity
    num::Tensor laplacian; // N x N importance source, undefined when identity
    bool identity = false;
};

SpatialStructure compute_structure(num::Graph& g, const ModelParams& params,
                                   const ModelConfig& config);

/// One forward pass over a window batch: optional masking, temporal
/// feature extraction, spatial mixing, MLP head. Returns B x N one-step
/// predictions at the configured horizon.
num::Tensor forward(num::Graph& g, const num::Tensor& inputs, ModelParams& params,
                    const ModelConfig& config, num::BnMode mode,
                    const SpatialStructure& structure, const mask::Mask* input_mask = nullptr);

/// Mean squared error over batch and features.
num::Tensor loss(num::Graph& g, const num::Tensor& predictions, const num::Tensor& targets);

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_losses;
};

/// Mini-batch SGD with momentum over the training split (already cleaned
/// and normalized). The structure is recomputed every batch so gradients
/// flow into the embeddings; the laplacian is snapshotted per epoch when
/// snapshot_dir is nonempty.
TrainResult train(const data::TimeSeriesDataset& train_ds, const ModelConfig& config,
                  const std::string& snapshot_dir = "");

struct Predictions {
    Mat values;                   // (T - horizon) x N
    std::vector<int> target_rows; // row in the source split each row predicts
};

/// Mask-free forward over every window of a split, in eval mode.
/// `threads` > 1 fans independent batches out across worker threads with
/// frozen parameters; results are identical for any thread count.
Predictions predict(const data::TimeSeriesDataset& ds, ModelParams& params,
                    const ModelConfig& config, int threads = 1, int batch_size = 256);

} // namespace hyperts::model
