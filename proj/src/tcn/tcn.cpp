#include "hyperts/tcn/tcn.hpp"

#include <algorithm>
#include <cmath>

#include "hyperts/core/error.hpp"

namespace hyperts::tcn {

using num::Graph;
using num::Tensor;

int TcnConfig::max_kernel() const {
    return *std::max_element(kernel_sizes.begin(), kernel_sizes.end());
}

void TcnConfig::validate() const {
    if (layers < 1) throw ConfigError("tcn needs at least one layer");
    if (kernel_sizes.empty()) throw ConfigError("tcn kernel size list is empty");
    for (int k : kernel_sizes)
        if (k < 1) throw ConfigError("tcn kernel sizes must be >= 1");
    if (dilation_exponential <= 0.0) throw ConfigError("dilation exponential must be positive");
    if (conv_channels < 1 || residual_channels < 1 || skip_channels < 1)
        throw ConfigError("tcn channel widths must be positive");
    if (conv_channels % static_cast<int>(kernel_sizes.size()) != 0)
        throw ConfigError("conv channels (" + std::to_string(conv_channels) +
                          ") must split evenly across " + std::to_string(kernel_sizes.size()) +
                          " kernel sizes");
}

double receptive_field(int kernel_size, int layers, double dilation_exponential) {
    if (kernel_size < 2) throw ConfigError("receptive_field: kernel size must be >= 2");
    if (layers < 1) throw ConfigError("receptive_field: layers must be >= 1");
    if (dilation_exponential <= 0.0) throw ConfigError("receptive_field: DE must be positive");
    const double k = static_cast<double>(kernel_size);
    const double de = dilation_exponential;
    if (de > 1.0) return 1.0 + (k - 1.0) * std::pow(de, layers - 1) / (de - 1.0);
    return static_cast<double>(layers) * (k - 1.0) + 1.0;
}

int layer_dilation(double dilation_exponential, int layer) {
    const double d = std::pow(dilation_exponential, layer - 1);
    return std::max(1, static_cast<int>(std::llround(d)));
}

int required_window(const TcnConfig& config) {
    int needed = 1;
    for (int layer = 1; layer <= config.layers; ++layer)
        needed += (config.max_kernel() - 1) * layer_dilation(config.dilation_exponential, layer);
    return needed;
}

namespace {

Tensor conv_init(num::Shape shape, Rng& rng) {
    const auto fan_in = static_cast<double>(shape[1]) * static_cast<double>(shape[2]);
    const double bound = 1.0 / std::sqrt(std::max(1.0, fan_in));
    std::vector<double> data(num::shape_numel(shape));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(data), true);
}

Tensor bias_init(int n, Rng& rng, double bound) {
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from_data({n}, std::move(data), true);
}

} // namespace

TcnParams TcnParams::init(const TcnConfig& config, int in_channels, Rng& rng) {
    config.validate();
    const auto n_kernels = static_cast<int>(config.kernel_sizes.size());
    const int branch = config.conv_channels / n_kernels;

    TcnParams p;
    p.input_w = conv_init({config.residual_channels, in_channels, 1}, rng);
    p.input_b = bias_init(config.residual_channels, rng, 1.0 / std::sqrt(static_cast<double>(in_channels)));
    for (int layer = 0; layer < config.layers; ++layer) {
        TcnLayerParams lp;
        const double bound = 1.0 / std::sqrt(static_cast<double>(config.residual_channels));
        for (int k : config.kernel_sizes) {
            lp.filter_kernels.push_back(conv_init({branch, config.residual_channels, k}, rng));
            lp.filter_bias.push_back(bias_init(branch, rng, bound));
            lp.gate_kernels.push_back(conv_init({branch, config.residual_channels, k}, rng));
            lp.gate_bias.push_back(bias_init(branch, rng, bound));
        }
        lp.residual_w = conv_init({config.residual_channels, config.conv_channels, 1}, rng);
        lp.residual_b = bias_init(config.residual_channels, rng, bound);
        lp.skip_w = conv_init({config.skip_channels, config.conv_channels, 1}, rng);
        lp.skip_b = bias_init(config.skip_channels, rng, bound);
        p.layers.push_back(std::move(lp));
    }
    return p;
}

std::vector<std::pair<std::string, Tensor>> TcnParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("tcn.input_w", input_w);
    out.emplace_back("tcn.input_b", input_b);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& lp = layers[l];
        const std::string prefix = "tcn.layer" + std::to_string(l) + ".";
        for (std::size_t k = 0; k < lp.filter_kernels.size(); ++k) {
            out.emplace_back(prefix + "filter_w" + std::to_string(k), lp.filter_kernels[k]);
            out.emplace_back(prefix + "filter_b" + std::to_string(k), lp.filter_bias[k]);
            out.emplace_back(prefix + "gate_w" + std::to_string(k), lp.gate_kernels[k]);
            out.emplace_back(prefix + "gate_b" + std::to_string(k), lp.gate_bias[k]);
        }
        out.emplace_back(prefix + "residual_w", lp.residual_w);
        out.emplace_back(prefix + "residual_b", lp.residual_b);
        out.emplace_back(prefix + "skip_w", lp.skip_w);
        out.emplace_back(prefix + "skip_b", lp.skip_b);
    }
    return out;
}

num::Tensor dilated_inception(Graph& g, const Tensor& x, const std::vector<Tensor>& kernels,
                              const std::vector<Tensor>& biases, int dilation) {
    if (kernels.empty()) throw ConfigError("dilated_inception: no kernels");
    int shortest = x.dim(3);
    std::vector<Tensor> branches;
    branches.reserve(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        Tensor out = g.conv_time(x, kernels[i], biases[i], dilation);
        shortest = std::min(shortest, out.dim(3));
        branches.push_back(std::move(out));
    }
    for (auto& b : branches) b = g.crop_time(b, shortest);
    return g.concat_channels(branches);
}

num::Tensor gated_fusion(Graph& g, const Tensor& filter_out, const Tensor& gate_out) {
    if (filter_out.shape() != gate_out.shape())
        throw DimensionError("gated_fusion: filter and gate shapes differ");
    return g.mul(g.tanh(filter_out), g.sigmoid(gate_out));
}

num::Tensor residual_step(Graph& g, const Tensor& layer_in, const Tensor& fused,
                          const Tensor& proj_w, const Tensor& proj_b) {
    Tensor projected = g.conv_time(fused, proj_w, proj_b, 1);
    Tensor aligned = g.crop_time(layer_in, projected.dim(3));
    return g.add(projected, aligned);
}

num::Tensor skip_collect(Graph& g, const std::vector<Tensor>& fused_list,
                         const std::vector<const TcnLayerParams*>& layer_params,
                         int final_length) {
    if (fused_list.empty()) throw ConfigError("skip_collect: empty fused list");
    if (fused_list.size() != layer_params.size())
        throw DimensionError("skip_collect: one parameter set per fused output required");
    Tensor total;
    for (std::size_t i = 0; i < fused_list.size(); ++i) {
        Tensor projected =
            g.conv_time(fused_list[i], layer_params[i]->skip_w, layer_params[i]->skip_b, 1);
        Tensor cropped = g.crop_time(projected, final_length);
        total = total.defined() ? g.add(total, cropped) : cropped;
    }
    return total;
}

TcnOutput tcn_forward(Graph& g, const Tensor& x, const TcnConfig& config,
                      const TcnParams& params) {
    config.validate();
    if (x.ndim() != 4) throw DimensionError("tcn_forward: input must be B x C x N x T");
    const int window = x.dim(3);
    const int needed = required_window(config);
    if (window < needed)
        throw ConfigError("window length " + std::to_string(window) +
                          " below the receptive field; need at least " + std::to_string(needed));
    if (static_cast<int>(params.layers.size()) != config.layers)
        throw DimensionError("tcn_forward: parameter set has " +
                             std::to_string(params.layers.size()) + " layers, config wants " +
                             std::to_string(config.layers));

    Tensor z = g.conv_time(x, params.input_w, params.input_b, 1);
    std::vector<Tensor> fused_list;
    std::vector<const TcnLayerParams*> layer_ptrs;
    for (int layer = 1; layer <= config.layers; ++layer) {
        const auto& lp = params.layers[static_cast<std::size_t>(layer - 1)];
        const int dilation = layer_dilation(config.dilation_exponential, layer);
        Tensor filter_out = dilated_inception(g, z, lp.filter_kernels, lp.filter_bias, dilation);
        Tensor gate_out = dilated_inception(g, z, lp.gate_kernels, lp.gate_bias, dilation);
        Tensor fused = gated_fusion(g, filter_out, gate_out);
        fused_list.push_back(fused);
        layer_ptrs.push_back(&lp);
        z = residual_step(g, z, fused, lp.residual_w, lp.residual_b);
    }
    return TcnOutput{z, skip_collect(g, fused_list, layer_ptrs, z.dim(3))};
}

} // namespace hyperts::tcn
