#include "hyperts/mask/masking.hpp"

#include <algorithm>
#include <cmath>

#include "hyperts/core/error.hpp"
#include "hyperts/core/rng.hpp"

namespace hyperts::mask {

void MaskConfig::validate() const {
    if (base_ratio <= 0.0 || base_ratio >= 1.0)
        throw ConfigError("mask ratio must lie in (0, 1)");
    if (tau <= 0.0) throw ConfigError("mask temperature must be positive");
    if (alpha_decay <= 0.0 || alpha_decay > 1.0)
        throw ConfigError("temporal decay must lie in (0, 1]");
    for (std::size_t i = 1; i < stage_boundaries.size(); ++i)
        if (stage_boundaries[i] < stage_boundaries[i - 1])
            throw ConfigError("mask stage boundaries must be nondecreasing");
}

std::vector<double> importance_scores(const num::Tensor& laplacian) {
    if (laplacian.ndim() != 2 || laplacian.dim(0) != laplacian.dim(1))
        throw DimensionError("importance_scores expects a square laplacian");
    const int n = laplacian.dim(0);
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        scores[static_cast<std::size_t>(i)] =
            laplacian.data()[static_cast<std::size_t>(i) * n + i];
    return scores;
}

std::vector<double> mask_probabilities(const std::vector<double>& scores, double tau) {
    if (tau <= 0.0) throw ConfigError("mask temperature must be positive");
    if (scores.empty()) throw DimensionError("mask_probabilities: empty score vector");
    const double max_s = *std::max_element(scores.begin(), scores.end());
    std::vector<double> probs(scores.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        probs[i] = std::exp((scores[i] - max_s) / tau);
        denom += probs[i];
    }
    for (auto& p : probs) p /= denom;
    return probs;
}

std::vector<double> node_probabilities(const std::vector<double>& scores,
                                       const MaskConfig& config) {
    if (!config.invert_importance) return mask_probabilities(scores, config.tau);
    std::vector<double> negated(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) negated[i] = -scores[i];
    return mask_probabilities(negated, config.tau);
}

std::vector<double> temporal_weights(double alpha, int t_len) {
    if (alpha <= 0.0 || alpha > 1.0) throw ConfigError("temporal decay must lie in (0, 1]");
    if (t_len < 1) throw ConfigError("temporal_weights: sequence length must be >= 1");
    std::vector<double> weights(static_cast<std::size_t>(t_len));
    double total = 0.0;
    double power = 1.0;
    for (int t = 0; t < t_len; ++t) {
        weights[static_cast<std::size_t>(t)] = power;
        total += power;
        power *= alpha;
    }
    for (auto& w : weights) w /= total;
    return weights;
}

Mask sample_mask(const std::vector<double>& probs, const std::vector<double>& weights,
                 double ratio, Stage stage, std::uint64_t seed, int batch, int features) {
    if (ratio < 0.0 || ratio >= 1.0) throw ConfigError("mask ratio must lie in [0, 1)");
    if (batch < 1 || features < 1) throw ConfigError("mask batch and feature sizes must be >= 1");
    const auto n = static_cast<int>(probs.size());
    const auto t_len = static_cast<int>(weights.size());
    if (n < 1 || t_len < 1) throw DimensionError("sample_mask: empty probabilities or weights");

    Mask mask;
    mask.values = num::Tensor::full({batch, features, n, t_len}, 1.0);
    if (ratio == 0.0 || stage == Stage::off) return mask;

    Rng rng(seed);
    std::size_t idx = 0;
    for (int b = 0; b < batch; ++b)
        for (int f = 0; f < features; ++f)
            for (int i = 0; i < n; ++i) {
                const double node_factor =
                    static_cast<double>(n) * probs[static_cast<std::size_t>(i)];
                for (int t = 0; t < t_len; ++t, ++idx) {
                    double p = ratio;
                    if (stage == Stage::laplacian) {
                        // Weights are age-indexed; applying them in column
                        // order drops the oldest steps hardest.
                        const double time_factor =
                            static_cast<double>(t_len) * weights[static_cast<std::size_t>(t)];
                        p = std::clamp(ratio * node_factor * time_factor, 0.0, 1.0);
                    }
                    if (rng.bernoulli(p)) mask.values.data()[idx] = 0.0;
                }
            }
    return mask;
}

num::Tensor apply_mask(num::Graph& g, const num::Tensor& x, const Mask& mask) {
    if (x.shape() != mask.values.shape())
        throw DimensionError("apply_mask: input " + num::shape_str(x.shape()) + " vs mask " +
                             num::shape_str(mask.values.shape()));
    return g.mul(x, mask.values);
}

Stage stage_for_epoch(int epoch, const MaskConfig& config, int total_epochs, bool training) {
    if (epoch < 0) throw ConfigError("epoch must be nonnegative");
    if (!training) return Stage::off;

    int laplacian_start;
    int off_start = -1; // disabled unless configured
    if (config.stage_boundaries.empty()) {
        laplacian_start = (total_epochs + 2) / 3;
    } else {
        laplacian_start = config.stage_boundaries[0];
        if (config.stage_boundaries.size() > 1) off_start = config.stage_boundaries[1];
    }
    if (off_start >= 0 && epoch >= off_start) return Stage::off;
    return epoch < laplacian_start ? Stage::random : Stage::laplacian;
}

} // namespace hyperts::mask
