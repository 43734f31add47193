#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hyperts/core/rng.hpp"
#include "hyperts/num/graph.hpp"

namespace hyperts::tcn {

struct TcnConfig {
    int layers = 2;
    std::vector<int> kernel_sizes{2, 3, 6, 7};
    double dilation_exponential = 1.0;
    int conv_channels = 16;     // inception output width, split evenly across kernels
    int residual_channels = 16;
    int skip_channels = 32;

    int max_kernel() const;
    void validate() const;
};

/// Receptive-field length for a kernel size, layer count and dilation
/// growth factor. Piecewise form: geometric dilation growth for DE > 1,
/// constant dilation otherwise.
double receptive_field(int kernel_size, int layers, double dilation_exponential);

/// Dilation used by 1-based layer index: max(1, round(DE^(layer-1))).
int layer_dilation(double dilation_exponential, int layer);

/// Timesteps a window must provide so every layer's convolution has at
/// least one valid output: 1 + sum over layers of (max_kernel-1)*dilation.
int required_window(const TcnConfig& config);

struct TcnLayerParams {
    std::vector<num::Tensor> filter_kernels; // one per kernel size, Cb x Ci x k
    std::vector<num::Tensor> filter_bias;
    std::vector<num::Tensor> gate_kernels;
    std::vector<num::Tensor> gate_bias;
    num::Tensor residual_w, residual_b; // 1x1 back to residual width
    num::Tensor skip_w, skip_b;         // 1x1 to skip width
};

struct TcnParams {
    num::Tensor input_w, input_b; // 1x1 projection into residual width
    std::vector<TcnLayerParams> layers;

    static TcnParams init(const TcnConfig& config, int in_channels, Rng& rng);
    std::vector<std::pair<std::string, num::Tensor>> named() const;
};

/// Parallel causal convolutions with the layer's kernel sizes, truncated
/// from the left to the shortest branch and concatenated on channels.
num::Tensor dilated_inception(num::Graph& g, const num::Tensor& x,
                              const std::vector<num::Tensor>& kernels,
                              const std::vector<num::Tensor>& biases, int dilation);

/// tanh(filter) gated by sigmoid(gate), elementwise.
num::Tensor gated_fusion(num::Graph& g, const num::Tensor& filter_out,
                         const num::Tensor& gate_out);

/// 1x1-project the fused output and add the time-aligned tail of the
/// layer input.
num::Tensor residual_step(num::Graph& g, const num::Tensor& layer_in, const num::Tensor& fused,
                          const num::Tensor& proj_w, const num::Tensor& proj_b);

/// Project each layer's fused output to skip width, crop to the final
/// length and sum.
num::Tensor skip_collect(num::Graph& g, const std::vector<num::Tensor>& fused_list,
                         const std::vector<const TcnLayerParams*>& layer_params,
                         int final_length);

struct TcnOutput {
    num::Tensor features; // B x residual_channels x N x T_final
    num::Tensor skip_sum; // B x skip_channels x N x T_final
};

/// Stacked inception -> gate -> residual/skip blocks over a
/// B x C x N x T input.
TcnOutput tcn_forward(num::Graph& g, const num::Tensor& x, const TcnConfig& config,
                      const TcnParams& params);

} // namespace hyperts::tcn
