#include "hyperts/gconv/graphconv.hpp"

#include <algorithm>
#include <cmath>

#include "hyperts/core/error.hpp"

namespace hyperts::gconv {

using num::Graph;
using num::Tensor;

namespace {
constexpr double kNormFloor = 1e-16; // squared-norm floor for zero embedding rows
constexpr double kDegreeFloor = 1e-8;
} // namespace

num::Tensor hypergraph_conv(Graph& g, const Tensor& x, const hg::HypergraphStructure& structure,
                            const Tensor& w) {
    if (x.ndim() != 2 || structure.mixing.dim(1) != x.dim(0))
        throw DimensionError("hypergraph_conv: features must be N x F with N = " +
                             std::to_string(structure.mixing.dim(0)));
    return g.relu(g.matmul(g.matmul(structure.mixing, x), w));
}

num::Tensor residual_correlation(Graph& g, const Tensor& embeddings) {
    if (embeddings.ndim() != 2)
        throw DimensionError("residual_correlation expects N x d embeddings");
    Tensor sq_norm = g.row_sum(g.mul(embeddings, embeddings));
    Tensor inv_norm = g.rsqrt_clamped(sq_norm, kNormFloor);
    Tensor unit = g.scale_rows(embeddings, inv_norm);
    return g.matmul(unit, unit, false, true);
}

std::vector<std::vector<int>> topk_select(const Tensor& corr, int k) {
    if (corr.ndim() != 2 || corr.dim(0) != corr.dim(1))
        throw DimensionError("topk_select expects a square correlation matrix");
    const int n = corr.dim(0);
    if (k < 1 || k > n - 1)
        throw ConfigError("top-k neighbor count must lie in [1, " + std::to_string(n - 1) +
                          "], got " + std::to_string(k));

    std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
    std::vector<std::pair<double, int>> row;
    for (int i = 0; i < n; ++i) {
        row.clear();
        for (int j = 0; j < n; ++j)
            if (j != i)
                row.emplace_back(corr.data()[static_cast<std::size_t>(i) * n + j], j);
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        auto& neighbors = out[static_cast<std::size_t>(i)];
        for (int r = 0; r < k; ++r) neighbors.push_back(row[static_cast<std::size_t>(r)].second);
        std::sort(neighbors.begin(), neighbors.end());
    }
    return out;
}

num::Tensor build_adjacency(Graph& g, const Tensor& corr,
                            const std::vector<std::vector<int>>& topk, bool binary) {
    const int n = corr.dim(0);
    if (static_cast<int>(topk.size()) != n)
        throw DimensionError("build_adjacency: one neighbor list per node required");

    Tensor mask = Tensor::zeros({n, n});
    for (int i = 0; i < n; ++i)
        for (int j : topk[static_cast<std::size_t>(i)]) {
            if (j < 0 || j >= n || j == i)
                throw ConfigError("build_adjacency: invalid neighbor index");
            mask.data()[static_cast<std::size_t>(i) * n + j] = 1.0;
        }

    Tensor eye = Tensor::identity(n);
    if (binary) return g.add(mask, eye);
    return g.add(g.mul(g.relu(corr), mask), eye);
}

num::Tensor normalized_adjacency(Graph& g, const Tensor& adjacency) {
    Tensor degree = g.row_sum(adjacency);
    Tensor inv_sqrt = g.rsqrt_clamped(degree, kDegreeFloor);
    return g.scale_cols(g.scale_rows(adjacency, inv_sqrt), inv_sqrt);
}

num::Tensor gcn_propagate(Graph& g, const Tensor& x, const Tensor& adjacency, const Tensor& w) {
    if (x.ndim() != 2 || adjacency.dim(1) != x.dim(0))
        throw DimensionError("gcn_propagate: features must be N x F with N = " +
                             std::to_string(adjacency.dim(0)));
    return g.relu(g.matmul(g.matmul(normalized_adjacency(g, adjacency), x), w));
}

GslState GslState::init(const GslConfig& config, Rng& rng) {
    if (config.nodes < 2) throw ConfigError("graph structure learning needs at least two nodes");
    if (config.embed_dim < 1) throw ConfigError("embedding dimension must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
    std::vector<double> data(static_cast<std::size_t>(config.nodes) *
                             static_cast<std::size_t>(config.embed_dim));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    GslState s;
    s.embeddings = Tensor::from_data({config.nodes, config.embed_dim}, std::move(data), true);
    return s;
}

std::vector<std::pair<std::string, Tensor>> GslState::named() const {
    return {{"gsl.embeddings", embeddings}};
}

num::Tensor gsl_adjacency(Graph& g, const GslState& state, int k, bool binary) {
    Tensor corr = residual_correlation(g, state.embeddings);
    auto topk = topk_select(corr, k);
    return build_adjacency(g, corr, topk, binary);
}

} // namespace hyperts::gconv
