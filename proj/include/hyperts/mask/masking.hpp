#pragma once

#include <cstdint>
#include <vector>

#include "hyperts/num/graph.hpp"

namespace hyperts::mask {

enum class Stage { random, laplacian, off };

struct MaskConfig {
    double base_ratio = 0.1;
    double tau = 1.0;         // softmax temperature over importance scores
    double alpha_decay = 0.95; // temporal decay factor
    std::vector<int> stage_boundaries; // empty picks the first third for random
    bool invert_importance = false;    // mask important nodes less instead of more

    void validate() const;
};

/// Binary keep-mask over a batch: entry 0 drops the value, 1 keeps it.
struct Mask {
    num::Tensor values; // B x F x N x T, entries in {0,1}
};

/// Node importance = diagonal of the laplacian.
std::vector<double> importance_scores(const num::Tensor& laplacian);

/// Temperature softmax over importance scores.
std::vector<double> mask_probabilities(const std::vector<double>& scores, double tau);

/// Importance scores routed through the inversion flag.
std::vector<double> node_probabilities(const std::vector<double>& scores,
                                       const MaskConfig& config);

/// Normalized decay weights indexed by age: entry 0 is the most recent
/// step and carries the largest weight for alpha < 1. Sums to 1.
std::vector<double> temporal_weights(double alpha, int t_len);

/// Draw a mask. Random stage drops positions i.i.d. with the given ratio.
/// Laplacian stage scales the drop probability per node by n*probs[i] and
/// per chronological column t by t_len*weights[t] (weights reversed onto
/// the window so the oldest column is dropped most), clamped to [0, 1];
/// the expected dropped fraction stays at the ratio.
Mask sample_mask(const std::vector<double>& probs, const std::vector<double>& weights,
                 double ratio, Stage stage, std::uint64_t seed, int batch, int features);

/// Elementwise product; masked entries become exactly zero.
num::Tensor apply_mask(num::Graph& g, const num::Tensor& x, const Mask& mask);

/// Piecewise-constant schedule over epochs; evaluation always runs
/// mask-free.
Stage stage_for_epoch(int epoch, const MaskConfig& config, int total_epochs, bool training);

} // namespace hyperts::mask
