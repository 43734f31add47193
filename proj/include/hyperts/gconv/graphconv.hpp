#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hyperts/core/rng.hpp"
#include "hyperts/hg/mtcl.hpp"
#include "hyperts/num/graph.hpp"

namespace hyperts::gconv {

/// Hypergraph convolution over node features x: N x F with weights F x F':
/// relu(theta * x * w), where theta is the structure's mixing operator.
num::Tensor hypergraph_conv(num::Graph& g, const num::Tensor& x,
                            const hg::HypergraphStructure& structure, const num::Tensor& w);

/// Pairwise cosine similarity of embedding rows; symmetric, unit diagonal
/// for nonzero rows, values in [-1, 1].
num::Tensor residual_correlation(num::Graph& g, const num::Tensor& embeddings);

/// Indices of the k largest off-diagonal correlations per node, ties
/// broken toward the lower index. Returned lists are sorted ascending.
std::vector<std::vector<int>> topk_select(const num::Tensor& corr, int k);

/// Adjacency from selected pairs. Weighted mode keeps relu(corr) on the
/// selected entries; binary mode writes plain ones (and detaches the
/// result from the correlation gradient). Self-loops are always added.
num::Tensor build_adjacency(num::Graph& g, const num::Tensor& corr,
                            const std::vector<std::vector<int>>& topk, bool binary = false);

/// Symmetric-normalized propagation relu(D^-1/2 A D^-1/2 x w).
num::Tensor gcn_propagate(num::Graph& g, const num::Tensor& x, const num::Tensor& adjacency,
                          const num::Tensor& w);

/// The normalized operator D^-1/2 A D^-1/2 alone, for batched mixing.
num::Tensor normalized_adjacency(num::Graph& g, const num::Tensor& adjacency);

struct GslConfig {
    int nodes = 0;
    int embed_dim = 16;
    int k = 2; // neighbors per node
};

struct GslState {
    num::Tensor embeddings; // N x d

    static GslState init(const GslConfig& config, Rng& rng);
    std::vector<std::pair<std::string, num::Tensor>> named() const;
};

/// Full structure-learning chain: cosine correlation, top-k selection,
/// adjacency assembly.
num::Tensor gsl_adjacency(num::Graph& g, const GslState& state, int k, bool binary = false);

} // namespace hyperts::gconv
