#include "hyperts/hg/mtcl.hpp"

#include <cmath>

#include "hyperts/core/csv.hpp"
#include "hyperts/core/error.hpp"

namespace hyperts::hg {

using num::Graph;
using num::Tensor;

namespace {

constexpr double kDegreeFloor = 1e-8;

Tensor uniform_init(num::Shape shape, double bound, Rng& rng) {
    std::vector<double> data(num::shape_numel(shape));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(data), true);
}

} // namespace

MtclParams MtclParams::init(const MtclConfig& config, Rng& rng) {
    if (config.nodes < 1) throw ConfigError("hypergraph needs at least one node");
    if (config.embed_dim < 1) throw ConfigError("embedding dimension must be >= 1");
    const int n = config.nodes;
    const int d = config.embed_dim;
    const int m = config.resolved_hyperedges();
    if (m < 1) throw ConfigError("hyperedge count must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));

    MtclParams p;
    p.n1 = uniform_init({n, d}, bound, rng);
    p.n2 = uniform_init({n, d}, bound, rng);
    p.w1 = uniform_init({d, d}, bound, rng);
    p.w2 = uniform_init({d, d}, bound, rng);
    p.wh1 = uniform_init({d, d}, bound, rng);
    p.wh2 = uniform_init({d, m}, bound, rng);
    p.wa = uniform_init({d, m}, bound, rng);
    return p;
}

std::vector<std::pair<std::string, Tensor>> MtclParams::named() const {
    return {{"mtcl.n1", n1},   {"mtcl.n2", n2},   {"mtcl.w1", w1}, {"mtcl.w2", w2},
            {"mtcl.wh1", wh1}, {"mtcl.wh2", wh2}, {"mtcl.wa", wa}};
}

std::pair<Tensor, Tensor> embed_transform(Graph& g, const MtclParams& params, double alpha) {
    Tensor n1t = g.tanh(g.scale(g.matmul(params.n1, params.w1), alpha));
    Tensor n2t = g.tanh(g.scale(g.matmul(params.n2, params.w2), alpha));
    return {n1t, n2t};
}

num::Tensor hyperedge_generator(Graph& g, const Tensor& n1t, const MtclParams& params) {
    return g.matmul(g.relu(g.matmul(n1t, params.wh1)), params.wh2);
}

num::Tensor attention_scores(Graph& g, const Tensor& nt, const MtclParams& params) {
    return g.sigmoid(g.matmul(nt, params.wa));
}

num::Tensor build_incidence(Graph& g, const Tensor& gen, const Tensor& att) {
    return g.relu(g.mul(gen, att));
}

num::Tensor augment_self_loops(Graph& g, const Tensor& h_raw) {
    if (h_raw.ndim() != 2) throw DimensionError("augment_self_loops expects a 2-D incidence");
    return g.concat_cols(h_raw, Tensor::identity(h_raw.dim(0)));
}

std::pair<Tensor, Tensor> degrees(Graph& g, const Tensor& h) {
    return {g.row_sum(h), g.col_sum(h)};
}

std::pair<Tensor, Tensor> laplacian(Graph& g, const Tensor& h, const Tensor& dv,
                                    const Tensor& de) {
    Tensor dv_rsqrt = g.rsqrt_clamped(dv, kDegreeFloor);
    Tensor de_inv = g.recip_clamped(de, kDegreeFloor);
    Tensor scaled = g.scale_rows(h, dv_rsqrt);              // Dv^-1/2 H
    Tensor weighted = g.scale_cols(scaled, de_inv);         // Dv^-1/2 H De^-1
    Tensor theta = g.matmul(weighted, scaled, false, true); // ... H^T Dv^-1/2
    Tensor lap = g.sub(Tensor::identity(h.dim(0)), theta);
    return {theta, lap};
}

HypergraphStructure build_structure(Graph& g, const MtclParams& params,
                                    const MtclConfig& config) {
    auto [n1t, n2t] = embed_transform(g, params, config.alpha);
    Tensor gen = hyperedge_generator(g, n1t, params);
    Tensor att =
        attention_scores(g, config.attention_input == AttentionInput::n2 ? n2t : n1t, params);
    Tensor h = augment_self_loops(g, build_incidence(g, gen, att));
    auto [dv, de] = degrees(g, h);
    auto [theta, lap] = laplacian(g, h, dv, de);
    return HypergraphStructure{h, dv, de, theta, lap};
}

HypergraphStructure identity_structure(int nodes) {
    HypergraphStructure s;
    s.incidence = Tensor::identity(nodes);
    s.node_degree = Tensor::full({nodes}, 1.0);
    s.edge_degree = Tensor::full({nodes}, 1.0);
    s.mixing = Tensor::identity(nodes);
    s.laplacian = Tensor::zeros({nodes, nodes});
    return s;
}

std::string snapshot_laplacian(const Tensor& lap, const std::vector<std::string>& feature_names,
                               int epoch, const std::string& out_dir) {
    if (lap.ndim() != 2) throw DimensionError("snapshot_laplacian expects a 2-D tensor");
    const auto n = static_cast<std::size_t>(lap.dim(0));
    Mat m(n, static_cast<std::size_t>(lap.dim(1)), lap.data());
    std::vector<std::string> header = feature_names;
    if (header.empty())
        for (std::size_t i = 0; i < m.cols(); ++i) header.push_back("f" + std::to_string(i));
    const std::string path = out_dir + "/laplacian_epoch" + std::to_string(epoch) + ".csv";
    csv::write_matrix(path, header, m);
    return path;
}

} // namespace hyperts::hg
