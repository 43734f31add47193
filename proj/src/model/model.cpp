#include "hyperts/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <thread>

#include "hyperts/core/error.hpp"

namespace hyperts::model {

using num::BnMode;
using num::Graph;
using num::Tensor;

namespace {

Tensor uniform_init(num::Shape shape, double bound, Rng& rng) {
    std::vector<double> data(num::shape_numel(shape));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(data), true);
}

Tensor conv_init(num::Shape shape, Rng& rng) {
    const double fan_in = static_cast<double>(shape[1]) * static_cast<double>(shape[2]);
    return uniform_init(std::move(shape), 1.0 / std::sqrt(std::max(1.0, fan_in)), rng);
}

void shuffle_ids(std::vector<int>& ids, Rng& rng) {
    for (std::size_t i = ids.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(ids[i - 1], ids[j]);
    }
}

// SGD with classical momentum: v <- mu*v + g, p <- p - lr*v.
class SgdMomentum {
public:
    SgdMomentum(std::vector<std::pair<std::string, Tensor>> params, double lr, double momentum)
        : params_(std::move(params)), lr_(lr), momentum_(momentum) {
        for (const auto& [name, t] : params_) {
            (void)name;
            velocity_.emplace_back(t.numel(), 0.0);
        }
    }

    void zero_grad() {
        for (auto& [name, t] : params_) {
            (void)name;
            t.zero_grad();
        }
    }

    void step() {
        for (std::size_t p = 0; p < params_.size(); ++p) {
            Tensor& t = params_[p].second;
            auto& vel = velocity_[p];
            const auto& grad = t.grad();
            for (std::size_t i = 0; i < vel.size(); ++i) {
                vel[i] = momentum_ * vel[i] + grad[i];
                t.data()[i] -= lr_ * vel[i];
            }
        }
    }

private:
    std::vector<std::pair<std::string, Tensor>> params_;
    std::vector<std::vector<double>> velocity_;
    double lr_;
    double momentum_;
};

} // namespace

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng) {
    config.validate();
    const int n = config.hypergraph.nodes;
    const int k_window = config.window;
    const int skip = config.tcn.skip_channels;
    const int gconv = config.resolved_gconv_channels();

    ModelParams p;
    p.mtcl = hg::MtclParams::init(config.hypergraph, rng);
    {
        const double bound = 1.0 / std::sqrt(static_cast<double>(config.hypergraph.embed_dim));
        p.gsl.embeddings = uniform_init({n, config.hypergraph.embed_dim}, bound, rng);
    }
    p.tcn = tcn::TcnParams::init(config.tcn, 1, rng);

    p.time_w1 = conv_init({skip, k_window, 1}, rng);
    p.time_b1 = uniform_init({skip}, 1.0 / std::sqrt(static_cast<double>(k_window)), rng);
    p.time_w2 = conv_init({skip, skip, 1}, rng);
    p.time_b2 = uniform_init({skip}, 1.0 / std::sqrt(static_cast<double>(skip)), rng);

    p.spatial_w = conv_init({gconv, skip, 1}, rng);
    p.spatial_b = uniform_init({gconv}, 1.0 / std::sqrt(static_cast<double>(skip)), rng);

    p.dense_w = conv_init({gconv * n, skip * n, 1}, rng);
    p.dense_b = uniform_init({gconv * n}, 1.0 / std::sqrt(static_cast<double>(skip * n)), rng);

    int width = gconv;
    for (int hidden : config.mlp_hidden) {
        MlpLayer layer;
        layer.w = conv_init({hidden, width, 1}, rng);
        layer.b = uniform_init({hidden}, 1.0 / std::sqrt(static_cast<double>(width)), rng);
        layer.gamma = Tensor::full({hidden}, 1.0, true);
        layer.beta = Tensor::zeros({hidden}, true);
        layer.bn = num::BatchNormState::init(hidden);
        p.mlp.push_back(std::move(layer));
        width = hidden;
    }
    p.head_w = conv_init({1, width, 1}, rng);
    p.head_b = uniform_init({1}, 1.0 / std::sqrt(static_cast<double>(width)), rng);
    return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (auto& kv : mtcl.named()) out.push_back(kv);
    for (auto& kv : gsl.named()) out.push_back(kv);
    for (auto& kv : tcn.named()) out.push_back(kv);
    out.emplace_back("time.w1", time_w1);
    out.emplace_back("time.b1", time_b1);
    out.emplace_back("time.w2", time_w2);
    out.emplace_back("time.b2", time_b2);
    out.emplace_back("spatial.w", spatial_w);
    out.emplace_back("spatial.b", spatial_b);
    out.emplace_back("dense.w", dense_w);
    out.emplace_back("dense.b", dense_b);
    for (std::size_t i = 0; i < mlp.size(); ++i) {
        const std::string prefix = "mlp" + std::to_string(i) + ".";
        out.emplace_back(prefix + "w", mlp[i].w);
        out.emplace_back(prefix + "b", mlp[i].b);
        out.emplace_back(prefix + "gamma", mlp[i].gamma);
        out.emplace_back(prefix + "beta", mlp[i].beta);
    }
    out.emplace_back("head.w", head_w);
    out.emplace_back("head.b", head_b);
    return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> ModelParams::named_buffers() {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    for (std::size_t i = 0; i < mlp.size(); ++i) {
        const std::string prefix = "mlp" + std::to_string(i) + ".bn_";
        out.emplace_back(prefix + "mean", &mlp[i].bn.running_mean);
        out.emplace_back(prefix + "var", &mlp[i].bn.running_var);
    }
    return out;
}

SpatialStructure compute_structure(Graph& g, const ModelParams& params,
                                   const ModelConfig& config) {
    const int n = config.hypergraph.nodes;
    SpatialStructure out;
    if (config.ablation == Ablation::no_gcn) {
        out.identity = true;
        return out;
    }
    if (config.ablation == Ablation::no_mtcl) {
        auto s = hg::identity_structure(n);
        out.mixing = s.mixing;
        out.laplacian = s.laplacian;
        return out;
    }
    const bool gsl_path =
        config.ablation == Ablation::no_hyper || config.structure == StructureMode::gsl;
    if (gsl_path) {
        const int k = std::min(config.gsl_neighbors, n - 1);
        if (k < 1) throw ConfigError("graph structure learning needs at least two features");
        Tensor a = gconv::gsl_adjacency(g, params.gsl, k,
                                        config.ablation == Ablation::no_hyper);
        out.mixing = gconv::normalized_adjacency(g, a);
        out.laplacian = g.sub(Tensor::identity(n), out.mixing);
        return out;
    }
    auto s = hg::build_structure(g, params.mtcl, config.hypergraph);
    out.mixing = s.mixing;
    out.laplacian = s.laplacian;
    return out;
}

num::Tensor forward(Graph& g, const Tensor& inputs, ModelParams& params,
                    const ModelConfig& config, BnMode mode, const SpatialStructure& structure,
                    const mask::Mask* input_mask) {
    if (inputs.ndim() != 3)
        throw DimensionError("forward: inputs must be B x N x K, got " +
                             num::shape_str(inputs.shape()));
    const int batch = inputs.dim(0);
    const int n = inputs.dim(1);
    const int k_window = inputs.dim(2);
    if (n != config.hypergraph.nodes)
        throw DimensionError("forward: batch has " + std::to_string(n) + " features, model has " +
                             std::to_string(config.hypergraph.nodes));
    if (k_window != config.window)
        throw DimensionError("forward: window length " + std::to_string(k_window) +
                             " does not match configured " + std::to_string(config.window));

    Tensor x = g.reshape(inputs, {batch, 1, n, k_window});
    if (input_mask != nullptr) x = mask::apply_mask(g, x, *input_mask);

    Tensor temporal;
    if (config.ablation == Ablation::no_tcn) {
        Tensor by_time = g.permute4(x, {0, 3, 2, 1}); // B x K x N x 1
        Tensor h1 = g.relu(g.conv_time(by_time, params.time_w1, params.time_b1, 1));
        temporal = g.conv_time(h1, params.time_w2, params.time_b2, 1);
    } else {
        temporal = tcn::tcn_forward(g, x, config.tcn, params.tcn).skip_sum;
    }
    Tensor sp = g.crop_time(g.relu(temporal), 1); // B x skip x N x 1

    const int skip = config.tcn.skip_channels;
    const int gconv = config.resolved_gconv_channels();
    Tensor f;
    if (structure.identity) {
        Tensor flat = g.reshape(sp, {batch, skip * n, 1, 1});
        Tensor dense = g.conv_time(flat, params.dense_w, params.dense_b, 1);
        f = g.relu(g.reshape(dense, {batch, gconv, n, 1}));
    } else {
        Tensor mixed = g.node_mix(sp, structure.mixing);
        f = g.relu(g.conv_time(mixed, params.spatial_w, params.spatial_b, 1));
    }

    Tensor h = f;
    for (auto& layer : params.mlp)
        h = g.relu(g.batch_norm(g.conv_time(h, layer.w, layer.b, 1), layer.bn, layer.gamma,
                                layer.beta, mode));
    Tensor out = g.conv_time(h, params.head_w, params.head_b, 1);
    return g.reshape(out, {batch, n});
}

num::Tensor loss(Graph& g, const Tensor& predictions, const Tensor& targets) {
    return g.mse(predictions, targets);
}

TrainResult train(const data::TimeSeriesDataset& train_ds, const ModelConfig& config_in,
                  const std::string& snapshot_dir) {
    ModelConfig config = config_in;
    config.hypergraph.nodes = static_cast<int>(train_ds.features());
    config.validate();

    Rng rng(config.seed);
    TrainResult result{ModelParams::init(config, rng), {}};
    if (config.epochs == 0) return result;

    data::WindowSampler sampler(train_ds.values, config.window, config.horizon);
    std::vector<int> ids(static_cast<std::size_t>(sampler.count()));
    for (int i = 0; i < sampler.count(); ++i) ids[static_cast<std::size_t>(i)] = i;

    SgdMomentum optimizer(result.params.named(), config.lr, config.momentum);
    const auto weights = mask::temporal_weights(config.mask.alpha_decay, config.window);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const mask::Stage stage =
            mask::stage_for_epoch(epoch, config.mask, config.epochs, true);
        Rng shuffle_rng = rng.fork(1000 + static_cast<std::uint64_t>(epoch));
        shuffle_ids(ids, shuffle_rng);
        Rng mask_rng = rng.fork(7000 + static_cast<std::uint64_t>(epoch));

        int n_batches = (sampler.count() + config.batch - 1) / config.batch;
        if (config.batches_per_epoch > 0)
            n_batches = std::min(n_batches, config.batches_per_epoch);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (int b = 0; b < n_batches; ++b) {
            const std::size_t begin = static_cast<std::size_t>(b) * config.batch;
            const std::size_t end =
                std::min(begin + static_cast<std::size_t>(config.batch), ids.size());
            auto batch = sampler.make_batch(std::span<const int>(ids.data() + begin, end - begin));

            Graph g;
            auto structure = compute_structure(g, result.params, config);

            mask::Mask m;
            const mask::Mask* mask_ptr = nullptr;
            if (stage != mask::Stage::off) {
                std::vector<double> scores(static_cast<std::size_t>(config.hypergraph.nodes), 0.0);
                if (!structure.identity) scores = mask::importance_scores(structure.laplacian);
                const auto probs = mask::node_probabilities(scores, config.mask);
                m = mask::sample_mask(probs, weights, config.mask.base_ratio, stage,
                                      mask_rng.next_u64(), static_cast<int>(end - begin), 1);
                mask_ptr = &m;
            }

            try {
                Tensor pred = forward(g, batch.inputs, result.params, config, BnMode::train,
                                      structure, mask_ptr);
                Tensor l = loss(g, pred, batch.targets);
                epoch_loss += l.value() * static_cast<double>(end - begin);
                seen += end - begin;
                optimizer.zero_grad();
                g.backward(l);
            } catch (const NumericError& e) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(b) + ": " + e.what());
            }
            optimizer.step();
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(seen));

        if (!snapshot_dir.empty() && config.snapshot_laplacian) {
            Graph gs(false);
            auto structure = compute_structure(gs, result.params, config);
            if (!structure.identity)
                hg::snapshot_laplacian(structure.laplacian, train_ds.feature_names, epoch + 1,
                                       snapshot_dir);
        }
    }

    for (std::size_t e = 1; e < result.epoch_losses.size() && e < 5; ++e) {
        if (result.epoch_losses[e] > result.epoch_losses[e - 1]) {
            std::cerr << "warning: training loss rose from " << result.epoch_losses[e - 1]
                      << " to " << result.epoch_losses[e] << " at epoch " << e << "\n";
            break;
        }
    }
    return result;
}

Predictions predict(const data::TimeSeriesDataset& ds, ModelParams& params,
                    const ModelConfig& config_in, int threads, int batch_size) {
    ModelConfig config = config_in;
    if (config.hypergraph.nodes != static_cast<int>(ds.features()))
        throw DimensionError("predict: checkpoint expects " +
                             std::to_string(config.hypergraph.nodes) + " features, split has " +
                             std::to_string(ds.features()));
    if (threads < 1) throw ConfigError("thread count must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");

    data::WindowSampler sampler(ds.values, config.window, config.horizon);
    const int count = sampler.count();
    Predictions out;
    out.values = Mat(static_cast<std::size_t>(count), ds.features());
    out.target_rows.resize(static_cast<std::size_t>(count));

    // One frozen structure for the whole pass; parameters do not change.
    Graph structure_graph(false);
    auto structure = compute_structure(structure_graph, params, config);

    const int n_batches = (count + batch_size - 1) / batch_size;
    auto run_range = [&](int first_batch, int step) {
        for (int b = first_batch; b < n_batches; b += step) {
            const int begin = b * batch_size;
            const int end = std::min(begin + batch_size, count);
            std::vector<int> ids;
            ids.reserve(static_cast<std::size_t>(end - begin));
            for (int i = begin; i < end; ++i) ids.push_back(i);
            auto batch = sampler.make_batch(ids);
            Graph g(false);
            Tensor pred =
                forward(g, batch.inputs, params, config, BnMode::eval, structure, nullptr);
            for (int r = 0; r < end - begin; ++r) {
                for (std::size_t c = 0; c < ds.features(); ++c)
                    out.values(static_cast<std::size_t>(begin + r), c) =
                        pred.data()[static_cast<std::size_t>(r) * ds.features() + c];
                out.target_rows[static_cast<std::size_t>(begin + r)] =
                    batch.target_rows[static_cast<std::size_t>(r)];
            }
        }
    };

    if (threads == 1 || n_batches <= 1) {
        run_range(0, 1);
    } else {
        const int workers = std::min(threads, n_batches);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(run_range, w, workers);
        for (auto& t : pool) t.join();
    }
    return out;
}

} // namespace hyperts::model
