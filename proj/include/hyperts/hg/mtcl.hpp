#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hyperts/core/rng.hpp"
#include "hyperts/num/graph.hpp"

namespace hyperts::hg {

/// Which transformed embedding feeds the attention branch. The default
/// pairs attention with the second embedding; the alternative reuses the
/// first one.
enum class AttentionInput { n2, n1 };

struct MtclConfig {
    int nodes = 0;
    int embed_dim = 16;
    int hyperedges = 0; // 0 picks ceil(nodes / 2)
    double alpha = 3.0;
    AttentionInput attention_input = AttentionInput::n2;

    int resolved_hyperedges() const { return hyperedges > 0 ? hyperedges : (nodes + 1) / 2; }
};

/// Trainable tensors of the correlation-learning layer. The hidden width
/// of the hyperedge generator equals the embedding dimension.
struct MtclParams {
    num::Tensor n1, n2; // N x d node embeddings
    num::Tensor w1, w2; // d x d
    num::Tensor wh1;    // d x d
    num::Tensor wh2;    // d x m
    num::Tensor wa;     // d x m

    static MtclParams init(const MtclConfig& config, Rng& rng);
    std::vector<std::pair<std::string, num::Tensor>> named() const;
};

/// Learned hypergraph: nonnegative incidence with appended self-loop
/// edges, degree vectors, the mixing operator
/// theta = Dv^{-1/2} H De^{-1} H^T Dv^{-1/2} and laplacian = I - theta.
struct HypergraphStructure {
    num::Tensor incidence;   // N x (m + N)
    num::Tensor node_degree; // N, diagonal of Dv
    num::Tensor edge_degree; // m + N, diagonal of De
    num::Tensor mixing;      // N x N
    num::Tensor laplacian;   // N x N
};

std::pair<num::Tensor, num::Tensor> embed_transform(num::Graph& g, const MtclParams& params,
                                                    double alpha);
num::Tensor hyperedge_generator(num::Graph& g, const num::Tensor& n1t, const MtclParams& params);
num::Tensor attention_scores(num::Graph& g, const num::Tensor& nt, const MtclParams& params);
num::Tensor build_incidence(num::Graph& g, const num::Tensor& gen, const num::Tensor& att);
num::Tensor augment_self_loops(num::Graph& g, const num::Tensor& h_raw);
std::pair<num::Tensor, num::Tensor> degrees(num::Graph& g, const num::Tensor& h);

/// Assemble theta and the normalized laplacian from an incidence matrix
/// and its degree vectors. Zero-degree hyperedges are floored so the
/// inverse exists; they contribute nothing.
std::pair<num::Tensor, num::Tensor> laplacian(num::Graph& g, const num::Tensor& h,
                                              const num::Tensor& dv, const num::Tensor& de);

/// Full chain: embeddings -> incidence -> degrees -> laplacian.
HypergraphStructure build_structure(num::Graph& g, const MtclParams& params,
                                    const MtclConfig& config);

/// Self-loop-only structure (identity incidence): theta = I, laplacian = 0.
HypergraphStructure identity_structure(int nodes);

/// Write the laplacian as laplacian_epoch<epoch>.csv under out_dir.
/// Returns the file path.
std::string snapshot_laplacian(const num::Tensor& laplacian,
                               const std::vector<std::string>& feature_names, int epoch,
                               const std::string& out_dir);

} // namespace hyperts::hg
