#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperts/gconv/graphconv.hpp"
#include "hyperts/hg/mtcl.hpp"
#include "hyperts/mask/masking.hpp"
#include "hyperts/tcn/tcn.hpp"
#include "json.hpp"

namespace hyperts::model {

/// Component switches mirroring the ablation variants: drop the hypergraph
/// for a binary top-k graph, drop the temporal blocks for a per-node MLP,
/// drop graph propagation for a dense layer, or freeze the structure to
/// the identity.
enum class Ablation { full, no_hyper, no_tcn, no_gcn, no_mtcl };
enum class StructureMode { mtcl, gsl };

Ablation ablation_from_string(const std::string& name);
std::string to_string(Ablation a);
StructureMode structure_mode_from_string(const std::string& name);
std::string to_string(StructureMode m);

struct ModelConfig {
    int window = 16;
    int horizon = 1;

    tcn::TcnConfig tcn;
    hg::MtclConfig hypergraph;        // nodes filled from the dataset
    int gsl_neighbors = 2;            // top-k for the gsl path, clipped to N-1
    std::vector<int> mlp_hidden{32};
    int gconv_channels = 0;           // 0 keeps the skip width

    mask::MaskConfig mask;
    Ablation ablation = Ablation::full;
    StructureMode structure = StructureMode::mtcl;

    double lr = 1e-3;
    double momentum = 0.9;
    int epochs = 10;
    int batch = 64;
    int batches_per_epoch = 0; // 0 trains on every window each epoch
    std::uint64_t seed = 42;
    bool snapshot_laplacian = true;

    int resolved_gconv_channels() const {
        return gconv_channels > 0 ? gconv_channels : tcn.skip_channels;
    }

    /// Throws ConfigError on inconsistent settings. Requires
    /// hypergraph.nodes to be set.
    void validate() const;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

} // namespace hyperts::model
